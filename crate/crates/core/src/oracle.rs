//! Brute-force ground truth by exhaustive enumeration.
//!
//! Configurations are visited in lexicographic order (site 1 most
//! significant). Parallel enumeration splits the space into a fixed number of
//! prefix shards that does not depend on the thread count, accumulates each
//! shard in order and merges the shards in order, so results are
//! reproducible bit for bit.

use crate::error::{Error, Result};
use crate::model::EnergyModel;
use crate::parallel;
use crate::scaled::{LogSumExp, LogValue};
use crate::transfer::MarginalTable;

/// Largest number of configurations an enumeration may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_configs: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_configs: 1 << 24,
        }
    }
}

impl EnumerationBudget {
    pub fn new(max_configs: u128) -> Self {
        EnumerationBudget { max_configs }
    }

    /// Number of configurations of `length` sites over `n` states, if within
    /// budget.
    pub fn check(&self, n: usize, length: usize) -> Result<u128> {
        let needed = u32::try_from(length)
            .ok()
            .and_then(|l| (n as u128).checked_pow(l))
            .unwrap_or(u128::MAX);
        if needed > self.max_configs {
            return Err(Error::BudgetExceeded {
                needed,
                budget: self.max_configs,
            });
        }
        Ok(needed)
    }
}

/// Advances `z` to the next configuration in lexicographic order; false
/// after the last one.
fn advance(z: &mut [usize], n: usize) -> bool {
    for slot in z.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Calls `f` on every configuration of `length` sites over `n` states, in
/// lexicographic order.
pub fn for_each_configuration(n: usize, length: usize, mut f: impl FnMut(&[usize])) {
    let mut z = vec![0; length];
    loop {
        f(&z);
        if !advance(&mut z, n) {
            break;
        }
    }
}

/// Prefix length used for sharding: the smallest `k` with `N^k ≥ 64`,
/// capped by the chain length.
fn shard_prefix(n: usize, length: usize) -> usize {
    let mut k = 0;
    let mut count = 1usize;
    while k < length && count < 64 {
        count *= n;
        k += 1;
    }
    k
}

/// Runs `visit` over every configuration, one accumulator per prefix shard,
/// and returns the accumulators in shard order.
fn sharded<A, M, F>(model: &M, budget: EnumerationBudget, init: impl Fn() -> A + Sync, visit: F) -> Result<Vec<A>>
where
    A: Send,
    M: EnergyModel + ?Sized,
    F: Fn(&mut A, &[usize], f64) + Sync,
{
    let n = model.n_states();
    let length = model.length();
    budget.check(n, length)?;
    let k = shard_prefix(n, length);
    let shards = n.pow(k as u32);
    Ok(parallel::map_range(shards, |shard| {
        let mut z = vec![0; length];
        let mut rest = shard;
        for slot in z[..k].iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        let mut acc = init();
        loop {
            let e = model.energy_unchecked(&z);
            visit(&mut acc, &z, e);
            if !advance(&mut z[k..], n) {
                break;
            }
        }
        acc
    }))
}

/// `Σ_z exp U(z)` by streaming log-sum-exp.
pub fn brute_constant<M: EnergyModel + ?Sized>(model: &M, budget: EnumerationBudget) -> Result<LogValue> {
    let parts = sharded(model, budget, LogSumExp::new, |acc, _, e| acc.push(e))?;
    let mut total = LogSumExp::new();
    parts.iter().for_each(|p| total.merge(p));
    Ok(total.value())
}

fn check_sites(sites: &[usize], length: usize) -> Result<()> {
    if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSubset);
    }
    if let Some(&site) = sites.iter().find(|&&s| s == 0 || s > length) {
        return Err(Error::SiteOutOfRange { site, length });
    }
    Ok(())
}

/// Marginal table of `sites` (1-based, strictly increasing).
pub fn brute_marginal_table<M: EnergyModel + ?Sized>(
    model: &M,
    sites: &[usize],
    budget: EnumerationBudget,
) -> Result<MarginalTable> {
    let n = model.n_states();
    check_sites(sites, model.length())?;
    let cells = n.pow(sites.len() as u32);
    let parts = sharded(
        model,
        budget,
        || vec![LogSumExp::new(); cells],
        |acc, z, e| {
            let idx = sites.iter().fold(0, |a, &s| a * n + z[s - 1]);
            acc[idx].push(e);
        },
    )?;
    let mut cells_acc = vec![LogSumExp::new(); cells];
    for part in &parts {
        for (c, p) in cells_acc.iter_mut().zip(part) {
            c.merge(p);
        }
    }
    let mut total = LogSumExp::new();
    cells_acc.iter().for_each(|c| total.merge(c));
    let ln_total = total.value().ln();
    let probs = cells_acc
        .iter()
        .map(|c| c.value().div(LogValue::from_ln(ln_total)).to_f64())
        .collect();
    MarginalTable::new(sites.to_vec(), n, probs)
}

/// `π_S(z_S)` for one configuration of the subset.
pub fn brute_marginal<M: EnergyModel + ?Sized>(
    model: &M,
    sites: &[usize],
    config: &[usize],
    budget: EnumerationBudget,
) -> Result<f64> {
    brute_marginal_table(model, sites, budget)?.get(config)
}

/// Law of `z_t` given the states of the sites in `given` (pairs of 1-based
/// site and state), by summing the joint over all other sites.
pub fn brute_conditional<M: EnergyModel + ?Sized>(
    model: &M,
    t: usize,
    given: &[(usize, usize)],
    budget: EnumerationBudget,
) -> Result<Vec<f64>> {
    let n = model.n_states();
    let length = model.length();
    for &(s, state) in given.iter().chain(std::iter::once(&(t, 0))) {
        if s == 0 || s > length {
            return Err(Error::SiteOutOfRange { site: s, length });
        }
        if state >= n {
            return Err(Error::StateOutOfRange { state, n_states: n });
        }
    }
    if given.iter().any(|&(s, _)| s == t) {
        return Err(Error::InvalidArgument(format!(
            "site {t} is both conditioned on and queried"
        )));
    }
    let parts = sharded(
        model,
        budget,
        || vec![LogSumExp::new(); n],
        |acc, z, e| {
            if given.iter().all(|&(s, state)| z[s - 1] == state) {
                acc[z[t - 1]].push(e);
            }
        },
    )?;
    let mut cells = vec![LogSumExp::new(); n];
    for part in &parts {
        for (c, p) in cells.iter_mut().zip(part) {
            c.merge(p);
        }
    }
    let mut total = LogSumExp::new();
    cells.iter().for_each(|c| total.merge(c));
    let total = total.value();
    if total.is_zero() {
        return Err(Error::Numerical("conditioning event has no mass".into()));
    }
    Ok(cells.iter().map(|c| c.value().div(total).to_f64()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainModel, LogTable};

    #[test]
    fn lexicographic_order() {
        let mut seen = Vec::new();
        for_each_configuration(2, 3, |z| seen.push(z.to_vec()));
        assert_eq!(seen.len(), 8);
        assert_eq!(seen[0], vec![0, 0, 0]);
        assert_eq!(seen[1], vec![0, 0, 1]);
        assert_eq!(seen[7], vec![1, 1, 1]);
    }

    #[test]
    fn uniform_constant() {
        let m = ChainModel::homogeneous(3, LogTable::zeros(2)).unwrap();
        let c = brute_constant(&m, EnumerationBudget::default()).unwrap();
        assert!((c.to_f64() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_marginal() {
        let m = ChainModel::homogeneous(5, LogTable::zeros(3)).unwrap();
        let t = brute_marginal_table(&m, &[2, 4], EnumerationBudget::default()).unwrap();
        assert!(t.probs().iter().all(|p| (p - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn budget_enforced() {
        let m = ChainModel::homogeneous(30, LogTable::zeros(2)).unwrap();
        let err = brute_constant(&m, EnumerationBudget::default()).unwrap_err();
        assert!(err.is_capacity());
        assert!(brute_constant(&m, EnumerationBudget::new(1 << 10)).is_err());
    }

    #[test]
    fn conditional_sums_to_one() {
        let h = LogTable::new(2, vec![0.3, -0.2, 0.5, 1.1]).unwrap();
        let m = ChainModel::homogeneous(5, h).unwrap();
        let d = brute_conditional(&m, 3, &[(2, 1), (4, 0)], EnumerationBudget::default()).unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(brute_conditional(&m, 3, &[(3, 1)], EnumerationBudget::default()).is_err());
    }
}
