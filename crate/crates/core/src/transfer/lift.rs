//! Lifting an r-range model to a chain.
//!
//! Lifted site `ℓ` carries the r-tuple `y_ℓ = (z_ℓ, …, z_{ℓ+r−1})`, so there
//! are `T − r + 1` lifted sites. The step from `y_s` to `y_{s+1}` is
//!
//! ```text
//! M_s(a, b) = 1[b drops the first coordinate of a] · exp h_s(a, last(b))
//! ```
//!
//! and each r-range factor `h_s(z_s, …, z_{s+r})` enters exactly one step.
//! Violated shift constraints are exact zeros of `M_s`. With `r = 1` the
//! lifted chain is the original one.

use crate::error::{Error, Result};
use crate::model::RRangeModel;
use crate::scaled::{LogValue, ScaledNonNegMatrix};

use super::{MarginalTable, TransferChain};

/// A lifted r-range model, addressed by original sites.
#[derive(Clone, Debug)]
pub struct LiftedChain {
    chain: TransferChain,
    n_states: usize,
    range: usize,
    length: usize,
}

fn step_matrix(factor: &[f64], n: usize, r: usize) -> Result<ScaledNonNegMatrix> {
    let width = n.pow(r as u32);
    let tail = width / n;
    let mut ln = vec![f64::NEG_INFINITY; width * width];
    for a in 0..width {
        let shifted = (a % tail) * n;
        for last in 0..n {
            let b = shifted + last;
            ln[a * width + b] = factor[a * n + last];
        }
    }
    ScaledNonNegMatrix::from_log_table(width, width, &ln)
}

/// Lifts `model` to a chain on `N^r` states. `cap` bounds the number of
/// entries of one dense lifted matrix, `N^{2r}`.
pub fn lift_r_range(model: &RRangeModel, cap: usize) -> Result<LiftedChain> {
    let n = model.n_states();
    let r = model.range();
    let entries = (n as u128).checked_pow(2 * r as u32).unwrap_or(u128::MAX);
    if entries > cap as u128 {
        return Err(Error::CapExceeded {
            what: "lifted transfer matrix",
            needed: entries,
            cap: cap as u128,
        });
    }
    let steps = model.length() - r;
    let chain = match model.factors() {
        crate::model::PerSite::Shared(f) => {
            TransferChain::uniform(step_matrix(f, n, r)?, steps, None)?
        }
        crate::model::PerSite::Varying(fs) => TransferChain::varying(
            fs.iter()
                .map(|f| step_matrix(f, n, r))
                .collect::<Result<_>>()?,
        )?,
    };
    Ok(LiftedChain {
        chain,
        n_states: n,
        range: r,
        length: model.length(),
    })
}

impl LiftedChain {
    pub fn chain(&self) -> &TransferChain {
        &self.chain
    }

    /// Lifted site holding original site `t`, and the coordinate within it.
    pub fn locate(&self, t: usize) -> (usize, usize) {
        let last = self.length - self.range + 1;
        let site = t.min(last);
        (site, t - site)
    }

    pub fn normalizing_constant(&self) -> Result<LogValue> {
        self.chain.normalizing_constant()
    }

    /// Marginal on original sites, through the lifted sites that hold them.
    pub fn subset_marginal(&self, sites: &[usize], cap: usize) -> Result<MarginalTable> {
        if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset);
        }
        if let Some(&t) = sites.iter().find(|&&t| t == 0 || t > self.length) {
            return Err(Error::SiteOutOfRange {
                site: t,
                length: self.length,
            });
        }
        let located: Vec<(usize, usize)> = sites.iter().map(|&t| self.locate(t)).collect();
        let mut lifted: Vec<usize> = located.iter().map(|l| l.0).collect();
        lifted.dedup();
        let table = self.chain.subset_marginal(&lifted, cap)?;

        let n = self.n_states;
        let r = self.range;
        let mut probs = vec![0.0; n.pow(sites.len() as u32)];
        for (y, p) in table.iter() {
            let idx = located.iter().fold(0, |acc, &(site, coord)| {
                let k = lifted.iter().position(|&l| l == site).expect("site was lifted");
                let z = y[k] / n.pow((r - 1 - coord) as u32) % n;
                acc * n + z
            });
            probs[idx] += p;
        }
        MarginalTable::new(sites.to_vec(), n, probs)
    }
}
