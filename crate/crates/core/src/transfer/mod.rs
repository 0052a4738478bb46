//! Transfer-matrix recursions: normalizing constant, backward and forward
//! vectors, prefix marginals, marginals on arbitrary site subsets, and the
//! lifting of r-range models to chains.
//!
//! With `H_s = exp h_s`, `C = 1ᵀ H_1 ⋯ H_{T−1} 1`. The backward vectors are
//! `B_T = 1`, `B_{t−1} = H_{t−1} B_t`, the forward ones `F_1 = 1ᵀ`,
//! `F_t = F_{t−1} H_{t−1}`, and the marginal on `S = {s_1 < … < s_q}` is
//!
//! ```text
//! π_S(z_S) = C⁻¹ F_{s_1}(z_{s_1}) Π_i (H_{s_i} ⋯ H_{s_{i+1}−1})(z_{s_i}, z_{s_{i+1}}) B_{s_q}(z_{s_q})
//! ```
//!
//! which covers all four endpoint cases: when `1 ∈ S`, `F_1` is the all-ones
//! row and contributes nothing, and likewise `B_T` when `T ∈ S`.

mod lift;
mod marginal;

pub use lift::{lift_r_range, LiftedChain};
pub use marginal::MarginalTable;

use crate::error::{Error, Result};
use crate::model::{check_configuration, ChainModel, Potentials};
use crate::parallel;
use crate::scaled::{LogSumExp, LogValue, Orientation, ScaleSum, ScaledNonNegMatrix, ScaledVector};

/// Default cap on the number of entries of a marginal table.
pub const DEFAULT_TABLE_CAP: usize = 1 << 20;

/// The `T − 1` transfer matrices of a chain.
#[derive(Clone, Debug)]
pub enum Steps {
    /// `count` copies of `body`, the last one optionally replaced by `last`.
    Uniform {
        body: ScaledNonNegMatrix,
        count: usize,
        last: Option<ScaledNonNegMatrix>,
    },
    Varying(Vec<ScaledNonNegMatrix>),
}

/// How a constant was (or should be) evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluation {
    /// Left-to-right vector sweep, `O(T N²)`.
    Sweep,
    /// Repeated squaring of the homogeneous body, `O(N³ log T)`.
    Power,
}

/// A chain in transfer-matrix form. Square `N × N` steps, nonnegative
/// entries; exact zeros are allowed (hard shift constraints of lifted
/// chains).
#[derive(Clone, Debug)]
pub struct TransferChain {
    n_states: usize,
    steps: Steps,
}

fn check_square(m: &ScaledNonNegMatrix, n: usize) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "transfer matrix is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

impl TransferChain {
    pub fn from_model(model: &ChainModel) -> Self {
        let n = model.n_states();
        let to_matrix = |t: &crate::model::LogTable| {
            ScaledNonNegMatrix::from_log_table(n, n, t.values())
                .expect("log tables are finite and square")
        };
        let steps = match model.potentials() {
            Potentials::Homogeneous { body, last } => Steps::Uniform {
                body: to_matrix(body),
                count: model.length() - 1,
                last: last.as_ref().map(to_matrix),
            },
            Potentials::Explicit(ts) => Steps::Varying(ts.iter().map(to_matrix).collect()),
        };
        TransferChain { n_states: n, steps }
    }

    pub fn uniform(body: ScaledNonNegMatrix, count: usize, last: Option<ScaledNonNegMatrix>) -> Result<Self> {
        let n = body.rows();
        check_square(&body, n)?;
        if let Some(l) = &last {
            check_square(l, n)?;
        }
        if count == 0 {
            return Err(Error::TooShort(1));
        }
        Ok(TransferChain {
            n_states: n,
            steps: Steps::Uniform { body, count, last },
        })
    }

    pub fn varying(steps: Vec<ScaledNonNegMatrix>) -> Result<Self> {
        let n = steps.first().ok_or(Error::TooShort(1))?.rows();
        for m in &steps {
            check_square(m, n)?;
        }
        Ok(TransferChain {
            n_states: n,
            steps: Steps::Varying(steps),
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of sites `T`.
    pub fn length(&self) -> usize {
        match &self.steps {
            Steps::Uniform { count, .. } => count + 1,
            Steps::Varying(ms) => ms.len() + 1,
        }
    }

    pub fn steps(&self) -> &Steps {
        &self.steps
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.steps, Steps::Uniform { .. })
    }

    /// `H_s` for `s` in `1..T`.
    pub fn step(&self, s: usize) -> &ScaledNonNegMatrix {
        debug_assert!(s >= 1 && s < self.length());
        match &self.steps {
            Steps::Uniform { body, count, last } => match last {
                Some(l) if s == *count => l,
                _ => body,
            },
            Steps::Varying(ms) => &ms[s - 1],
        }
    }

    fn ones(&self, orientation: Orientation) -> ScaledVector {
        ScaledVector::ones(self.n_states, orientation)
    }

    /// Whether a homogeneous stretch of `k` steps is cheaper by squaring.
    fn prefers_power(&self, k: usize) -> bool {
        let n = self.n_states as f64;
        let k = k as f64;
        k > 1.0 && k * n * n >= n * n * n * k.log2()
    }

    /// The body matrix when steps up to `to` all use it.
    fn uniform_run(&self, to: usize) -> Option<&ScaledNonNegMatrix> {
        match &self.steps {
            Steps::Uniform { body, count, last } => {
                let body_end = if last.is_some() { count - 1 } else { *count };
                (to <= body_end).then_some(body)
            }
            Steps::Varying(_) => None,
        }
    }

    /// `v · H_from ⋯ H_to` (identity when `from > to`).
    pub fn apply_left(&self, v: &ScaledVector, from: usize, to: usize) -> Result<ScaledVector> {
        if from > to {
            return Ok(v.clone());
        }
        if let Some(body) = self.uniform_run(to) {
            let k = to - from + 1;
            if self.prefers_power(k) {
                return v.mul_matrix(&body.pow(k as u64)?);
            }
        } else if self.is_uniform() && to > from {
            // body run followed by the distinct last step
            let head = self.apply_left(v, from, to - 1)?;
            return head.mul_matrix(self.step(to));
        }
        let mut acc = v.clone();
        for s in from..=to {
            acc = acc.mul_matrix(self.step(s))?;
        }
        Ok(acc)
    }

    /// `H_from ⋯ H_to · v` (identity when `from > to`).
    pub fn apply_right(&self, from: usize, to: usize, v: &ScaledVector) -> Result<ScaledVector> {
        if from > to {
            return Ok(v.clone());
        }
        match self.uniform_run(to) {
            Some(body) => {
                let k = to - from + 1;
                if self.prefers_power(k) {
                    return body.pow(k as u64)?.mul_vector(v);
                }
            }
            None if self.is_uniform() => {
                let tail = self.step(to).mul_vector(v)?;
                return self.apply_right(from, to - 1, &tail);
            }
            None => {}
        }
        let mut acc = v.clone();
        for s in (from..=to).rev() {
            acc = self.step(s).mul_vector(&acc)?;
        }
        Ok(acc)
    }

    /// `H_from ⋯ H_to` as a matrix (identity when `from > to`).
    pub fn product(&self, from: usize, to: usize) -> Result<ScaledNonNegMatrix> {
        if from > to {
            return Ok(ScaledNonNegMatrix::identity(self.n_states));
        }
        if let Some(body) = self.uniform_run(to) {
            return body.pow((to - from + 1) as u64);
        }
        if self.is_uniform() {
            let head = self.product(from, to - 1)?;
            return head.matmul(self.step(to));
        }
        let mut acc = self.step(from).clone();
        for s in from + 1..=to {
            acc = acc.matmul(self.step(s))?;
        }
        Ok(acc)
    }

    /// `1ᵀ H_1 ⋯ H_{T−1} 1` by a left-to-right sweep of row vectors.
    pub fn constant_sweep(&self) -> Result<LogValue> {
        let mut acc = self.ones(Orientation::Row);
        let mut scale = ScaleSum::default();
        for s in 1..self.length() {
            acc = acc.mul_matrix(self.step(s))?;
            scale.add(acc.take_log_scale());
        }
        let tail = acc.dot(&self.ones(Orientation::Column))?;
        Ok(tail.mul(LogValue::from_ln(scale.value())))
    }

    /// `1ᵀ H_1 ⋯ H_{T−1} 1` by a right-to-left sweep of column vectors.
    pub fn constant_sweep_reversed(&self) -> Result<LogValue> {
        let mut acc = self.ones(Orientation::Column);
        let mut scale = ScaleSum::default();
        for s in (1..self.length()).rev() {
            acc = self.step(s).mul_vector(&acc)?;
            scale.add(acc.take_log_scale());
        }
        let head = self.ones(Orientation::Row).dot(&acc)?;
        Ok(head.mul(LogValue::from_ln(scale.value())))
    }

    /// `1ᵀ Hᵏ H_last 1` with `Hᵏ` by repeated squaring. Uniform chains only.
    pub fn constant_power(&self) -> Result<LogValue> {
        let Steps::Uniform { body, count, last } = &self.steps else {
            return Err(Error::Inapplicable {
                method: "power",
                reason: "chain potentials are not time invariant".into(),
            });
        };
        let ones_c = self.ones(Orientation::Column);
        let (k, tail) = match last {
            Some(l) => (count - 1, l.mul_vector(&ones_c)?),
            None => (*count, ones_c),
        };
        let head = self.ones(Orientation::Row).mul_matrix(&body.pow(k as u64)?)?;
        head.dot(&tail)
    }

    /// Evaluation the constant would use: squaring for homogeneous chains
    /// when `T N² ≥ N³ log₂ T`, sweeping otherwise.
    pub fn preferred_evaluation(&self) -> Evaluation {
        if self.is_uniform() && self.prefers_power(self.length()) {
            Evaluation::Power
        } else {
            Evaluation::Sweep
        }
    }

    pub fn normalizing_constant(&self) -> Result<LogValue> {
        match self.preferred_evaluation() {
            Evaluation::Power => self.constant_power(),
            Evaluation::Sweep => self.constant_sweep(),
        }
    }

    /// `B_1, …, B_T` (index `t − 1` holds `B_t`).
    pub fn backward_vectors(&self) -> Result<Vec<ScaledVector>> {
        let t_max = self.length();
        let mut out = Vec::with_capacity(t_max);
        let mut acc = self.ones(Orientation::Column);
        out.push(acc.clone());
        for s in (1..t_max).rev() {
            acc = self.step(s).mul_vector(&acc)?;
            out.push(acc.clone());
        }
        out.reverse();
        Ok(out)
    }

    /// `F_1, …, F_T` (index `t − 1` holds `F_t`).
    pub fn forward_vectors(&self) -> Result<Vec<ScaledVector>> {
        let t_max = self.length();
        let mut out = Vec::with_capacity(t_max);
        let mut acc = self.ones(Orientation::Row);
        out.push(acc.clone());
        for s in 1..t_max {
            acc = acc.mul_matrix(self.step(s))?;
            out.push(acc.clone());
        }
        Ok(out)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.length() {
            return Err(Error::SiteOutOfRange {
                site,
                length: self.length(),
            });
        }
        Ok(())
    }

    /// `π_1^t(z_1, …, z_t) = C⁻¹ Π_{s<t} H_s(z_s, z_{s+1}) · B_t(z_t)`.
    pub fn prefix_marginal(&self, t: usize, prefix: &[usize]) -> Result<f64> {
        self.check_site(t)?;
        check_configuration(prefix, t, self.n_states)?;
        let c = self.normalizing_constant()?;
        let b_t = self.apply_right(t, self.length() - 1, &self.ones(Orientation::Column))?;
        Ok(self.ln_prefix_weight(prefix, &b_t).div(c).to_f64())
    }

    pub(crate) fn ln_prefix_weight(&self, prefix: &[usize], b_t: &ScaledVector) -> LogValue {
        let t = prefix.len();
        let mut ln = b_t.ln_at(prefix[t - 1]);
        for s in 1..t {
            ln += self.step(s).ln_at(prefix[s - 1], prefix[s]);
        }
        LogValue::from_ln(ln)
    }

    /// Marginal law of the sites in `sites` (strictly increasing, `1..=T`).
    pub fn subset_marginal(&self, sites: &[usize], cap: usize) -> Result<MarginalTable> {
        if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset);
        }
        for &s in sites {
            self.check_site(s)?;
        }
        let n = self.n_states;
        let entries = (n as u128).checked_pow(sites.len() as u32).unwrap_or(u128::MAX);
        if entries > cap as u128 {
            return Err(Error::CapExceeded {
                what: "marginal table",
                needed: entries,
                cap: cap as u128,
            });
        }
        let entries = entries as usize;
        let q = sites.len();
        let t_max = self.length();

        let left = self.apply_left(&self.ones(Orientation::Row), 1, sites[0] - 1)?;
        let right = self.apply_right(sites[q - 1], t_max - 1, &self.ones(Orientation::Column))?;
        let links: Vec<ScaledNonNegMatrix> = sites
            .windows(2)
            .map(|w| self.product(w[0], w[1] - 1))
            .collect::<Result<_>>()?;

        let ln_weights = parallel::map_range(entries, |idx| {
            let z = MarginalTable::decode(idx, n, q);
            let mut ln = left.ln_at(z[0]) + right.ln_at(z[q - 1]);
            for (i, link) in links.iter().enumerate() {
                ln += link.ln_at(z[i], z[i + 1]);
            }
            ln
        });
        let mut total = LogSumExp::new();
        ln_weights.iter().for_each(|&w| total.push(w));
        let ln_total = total.value().ln();
        if !ln_total.is_finite() {
            return Err(Error::Numerical("marginal has no mass".into()));
        }
        let probs = ln_weights.iter().map(|w| (w - ln_total).exp()).collect();
        MarginalTable::new(sites.to_vec(), n, probs)
    }
}

/// `C` for a chain model, choosing squaring or sweeping by the cost rule.
pub fn normalizing_constant(model: &ChainModel) -> Result<LogValue> {
    TransferChain::from_model(model).normalizing_constant()
}

pub fn backward_vectors(model: &ChainModel) -> Result<Vec<ScaledVector>> {
    TransferChain::from_model(model).backward_vectors()
}

pub fn forward_vectors(model: &ChainModel) -> Result<Vec<ScaledVector>> {
    TransferChain::from_model(model).forward_vectors()
}

pub fn prefix_marginal(model: &ChainModel, t: usize, prefix: &[usize]) -> Result<f64> {
    TransferChain::from_model(model).prefix_marginal(t, prefix)
}

pub fn subset_marginal(model: &ChainModel, sites: &[usize]) -> Result<MarginalTable> {
    TransferChain::from_model(model).subset_marginal(sites, DEFAULT_TABLE_CAP)
}

#[cfg(test)]
mod tests;
