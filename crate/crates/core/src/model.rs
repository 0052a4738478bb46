//! Chain Gibbs models and their energies.
//!
//! Two conventions coexist. [`ChainModel`] carries saturated pair log
//! potentials `h_s(z_s, z_{s+1})`, `s = 1..T−1`, and is what every algorithm
//! consumes. [`SingletonPairModel`] keeps singletons `θ_s` and pairs `Ψ_s`
//! apart with `Ψ_T ≡ 0`; [`SingletonPairModel::to_chain_form`] folds it into
//! a chain, putting `θ_s` into `h_s` and the last singleton `θ_T` into
//! `h_{T−1}`, so each singleton is counted exactly once.

use crate::error::{Error, Result};
use crate::scaled::LogValue;

/// Anything with a finite alphabet, a number of sites and an energy.
pub trait EnergyModel: Sync {
    fn n_states(&self) -> usize;

    fn length(&self) -> usize;

    /// Energy of a configuration already known to be valid.
    fn energy_unchecked(&self, z: &[usize]) -> f64;

    fn energy(&self, z: &[usize]) -> Result<f64> {
        check_configuration(z, self.length(), self.n_states())?;
        Ok(self.energy_unchecked(z))
    }

    fn unnormalized_density(&self, z: &[usize]) -> Result<LogValue> {
        self.energy(z).map(LogValue::from_ln)
    }
}

pub(crate) fn check_configuration(z: &[usize], length: usize, n_states: usize) -> Result<()> {
    if z.len() != length {
        return Err(Error::LengthMismatch {
            expected: length,
            got: z.len(),
        });
    }
    if let Some(&state) = z.iter().find(|&&s| s >= n_states) {
        return Err(Error::StateOutOfRange { state, n_states });
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// A value either shared by every index or given per index.
#[derive(Clone, Debug, PartialEq)]
pub enum PerSite<T> {
    Shared(T),
    Varying(Vec<T>),
}

impl<T> PerSite<T> {
    /// Zero-based lookup.
    pub fn get(&self, i: usize) -> &T {
        match self {
            PerSite::Shared(x) => x,
            PerSite::Varying(xs) => &xs[i],
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, PerSite::Shared(_))
    }
}

/// A square `N × N` table of finite log potentials, row-major, rows indexing
/// the current state and columns the next.
#[derive(Clone, Debug, PartialEq)]
pub struct LogTable {
    n: usize,
    values: Vec<f64>,
}

impl LogTable {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "table has {} entries, expected {n}x{n}",
                values.len()
            )));
        }
        check_finite(&values, "log potential table")?;
        Ok(LogTable { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        LogTable {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let values = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.n + v]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Potentials {
    /// One body table for every step; `last` optionally replaces `h_{T−1}`.
    Homogeneous {
        body: LogTable,
        last: Option<LogTable>,
    },
    /// `h_1, …, h_{T−1}`.
    Explicit(Vec<LogTable>),
}

/// `π(z) ∝ exp Σ_{s=1}^{T−1} h_s(z_s, z_{s+1})` on `{0..N}^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel {
    n_states: usize,
    length: usize,
    potentials: Potentials,
    labels: Option<Vec<String>>,
}

impl ChainModel {
    pub fn homogeneous(length: usize, body: LogTable) -> Result<Self> {
        Self::build(
            body.n(),
            length,
            Potentials::Homogeneous { body, last: None },
        )
    }

    /// Homogeneous body with a distinct final table `h_{T−1}`.
    pub fn homogeneous_with_last(length: usize, body: LogTable, last: LogTable) -> Result<Self> {
        if last.n() != body.n() {
            return Err(Error::DimensionMismatch("last table size differs from body".into()));
        }
        Self::build(
            body.n(),
            length,
            Potentials::Homogeneous {
                body,
                last: Some(last),
            },
        )
    }

    /// `tables[s−1] = h_s`; the chain has `tables.len() + 1` sites.
    pub fn explicit(tables: Vec<LogTable>) -> Result<Self> {
        let n = tables.first().map(LogTable::n).ok_or(Error::TooShort(1))?;
        if tables.iter().any(|t| t.n() != n) {
            return Err(Error::DimensionMismatch("tables of different sizes".into()));
        }
        let length = tables.len() + 1;
        Self::build(n, length, Potentials::Explicit(tables))
    }

    fn build(n_states: usize, length: usize, potentials: Potentials) -> Result<Self> {
        if length < 2 {
            return Err(Error::TooShort(length));
        }
        if n_states < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 states, got {n_states}"
            )));
        }
        Ok(ChainModel {
            n_states,
            length,
            potentials,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_states {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} states",
                labels.len(),
                self.n_states
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same potentials, different length. Only homogeneous chains can be
    /// resized.
    pub fn with_length(&self, length: usize) -> Result<Self> {
        match &self.potentials {
            Potentials::Homogeneous { .. } => {
                let mut m = Self::build(self.n_states, length, self.potentials.clone())?;
                m.labels = self.labels.clone();
                Ok(m)
            }
            Potentials::Explicit(_) => Err(Error::InvalidArgument(
                "only homogeneous chains can change length".into(),
            )),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn potentials(&self) -> &Potentials {
        &self.potentials
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, state: usize) -> String {
        match &self.labels {
            Some(l) => l[state].clone(),
            None => state.to_string(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.potentials, Potentials::Homogeneous { .. })
    }

    /// `h_s` for `s` in `1..T`.
    pub fn table(&self, s: usize) -> &LogTable {
        debug_assert!(s >= 1 && s < self.length);
        match &self.potentials {
            Potentials::Homogeneous { body, last } => match last {
                Some(l) if s == self.length - 1 => l,
                _ => body,
            },
            Potentials::Explicit(ts) => &ts[s - 1],
        }
    }
}

impl EnergyModel for ChainModel {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn length(&self) -> usize {
        self.length
    }

    /// `Σ_s h_s(z_s, z_{s+1})`, summed left to right.
    fn energy_unchecked(&self, z: &[usize]) -> f64 {
        let mut u = 0.0;
        for s in 1..self.length {
            u += self.table(s).get(z[s - 1], z[s]);
        }
        u
    }
}

/// `π(z) ∝ exp{Σ_{s=1}^{T} θ_s(z_s) + Σ_{s=1}^{T−1} Ψ_s(z_s, z_{s+1})}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingletonPairModel {
    n_states: usize,
    length: usize,
    theta: PerSite<Vec<f64>>,
    psi: PerSite<LogTable>,
}

impl SingletonPairModel {
    pub fn homogeneous(length: usize, theta: Vec<f64>, psi: LogTable) -> Result<Self> {
        Self::build(length, PerSite::Shared(theta), PerSite::Shared(psi))
    }

    /// `theta` has `T` entries, `psi` has `T − 1`.
    pub fn explicit(theta: Vec<Vec<f64>>, psi: Vec<LogTable>) -> Result<Self> {
        let length = theta.len();
        if psi.len() + 1 != length {
            return Err(Error::DimensionMismatch(format!(
                "{} singleton vectors need {} pair tables, got {}",
                length,
                length.saturating_sub(1),
                psi.len()
            )));
        }
        Self::build(length, PerSite::Varying(theta), PerSite::Varying(psi))
    }

    pub fn build(length: usize, theta: PerSite<Vec<f64>>, psi: PerSite<LogTable>) -> Result<Self> {
        if length < 2 {
            return Err(Error::TooShort(length));
        }
        let n_states = psi.get(0).n();
        if n_states < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 states, got {n_states}"
            )));
        }
        let thetas: Vec<&Vec<f64>> = match &theta {
            PerSite::Shared(t) => vec![t],
            PerSite::Varying(ts) => {
                if ts.len() != length {
                    return Err(Error::DimensionMismatch(format!(
                        "{} singleton vectors for {length} sites",
                        ts.len()
                    )));
                }
                ts.iter().collect()
            }
        };
        for t in thetas {
            if t.len() != n_states {
                return Err(Error::DimensionMismatch(format!(
                    "singleton vector of length {} for {n_states} states",
                    t.len()
                )));
            }
            check_finite(t, "singleton potential")?;
        }
        if let PerSite::Varying(ps) = &psi {
            if ps.len() + 1 != length {
                return Err(Error::DimensionMismatch(format!(
                    "{} pair tables for {length} sites",
                    ps.len()
                )));
            }
            if ps.iter().any(|p| p.n() != n_states) {
                return Err(Error::DimensionMismatch("pair tables of different sizes".into()));
            }
        }
        Ok(SingletonPairModel {
            n_states,
            length,
            theta,
            psi,
        })
    }

    /// Embeds a chain as `θ ≡ 0`, `Ψ_s = h_s`.
    pub fn from_chain(chain: &ChainModel) -> Self {
        let n = chain.n_states();
        let psi = match chain.potentials() {
            Potentials::Homogeneous { body, last: None } => PerSite::Shared(body.clone()),
            _ => PerSite::Varying((1..chain.length()).map(|s| chain.table(s).clone()).collect()),
        };
        SingletonPairModel {
            n_states: n,
            length: chain.length(),
            theta: PerSite::Shared(vec![0.0; n]),
            psi,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn is_homogeneous(&self) -> bool {
        self.theta.is_shared() && self.psi.is_shared()
    }

    pub fn with_length(&self, length: usize) -> Result<Self> {
        if !self.is_homogeneous() {
            return Err(Error::InvalidArgument(
                "only homogeneous models can change length".into(),
            ));
        }
        Self::build(length, self.theta.clone(), self.psi.clone())
    }

    /// `θ_t` for `t` in `1..=T`.
    pub fn theta(&self, t: usize) -> &[f64] {
        self.theta.get(t - 1)
    }

    /// `Ψ_t` for `t` in `1..T`.
    pub fn psi(&self, t: usize) -> &LogTable {
        self.psi.get(t - 1)
    }

    pub fn theta_sites(&self) -> &PerSite<Vec<f64>> {
        &self.theta
    }

    pub fn psi_sites(&self) -> &PerSite<LogTable> {
        &self.psi
    }

    /// `θ_t(u) + Ψ_t(u, v)`, and `0` for the absent `Ψ_T`.
    #[inline]
    pub(crate) fn local(&self, t: usize, u: usize, v: usize) -> f64 {
        if t == self.length {
            self.theta(t)[u]
        } else {
            self.theta(t)[u] + self.psi(t).get(u, v)
        }
    }

    fn chain_table(&self, s: usize) -> LogTable {
        let tail = (s == self.length - 1).then(|| self.theta(self.length));
        fold_table(self.theta(s), self.psi(s), tail)
    }

    /// `h_s = θ_s(u) + Ψ_s(u,v)` for `s ≤ T−2` and
    /// `h_{T−1} = θ_{T−1}(u) + Ψ_{T−1}(u,v) + θ_T(v)`.
    pub fn to_chain_form(&self) -> ChainModel {
        let potentials = if self.is_homogeneous() {
            Potentials::Homogeneous {
                body: fold_table(self.theta(1), self.psi(1), None),
                last: Some(self.chain_table(self.length - 1)),
            }
        } else {
            Potentials::Explicit((1..self.length).map(|s| self.chain_table(s)).collect())
        };
        ChainModel {
            n_states: self.n_states,
            length: self.length,
            potentials,
            labels: None,
        }
    }
}

/// `θ(u) + Ψ(u, v)`, plus `tail(v)` when given.
fn fold_table(theta: &[f64], psi: &LogTable, tail: Option<&[f64]>) -> LogTable {
    let n = psi.n();
    let values = (0..n * n)
        .map(|i| {
            let (u, v) = (i / n, i % n);
            let h = theta[u] + psi.get(u, v);
            match tail {
                Some(t) => h + t[v],
                None => h,
            }
        })
        .collect();
    LogTable { n, values }
}

impl EnergyModel for SingletonPairModel {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn length(&self) -> usize {
        self.length
    }

    /// Summed in the same grouping as the chain form, so the two energies
    /// agree bit for bit.
    fn energy_unchecked(&self, z: &[usize]) -> f64 {
        let t_max = self.length;
        let mut u = 0.0;
        for s in 1..t_max {
            let mut h = self.theta(s)[z[s - 1]] + self.psi(s).get(z[s - 1], z[s]);
            if s == t_max - 1 {
                h += self.theta(t_max)[z[s]];
            }
            u += h;
        }
        u
    }
}

/// `π(z) ∝ Π_{s=1}^{T−r} H_s(z_s, …, z_{s+r})`, stored as log factors over
/// `(r+1)`-tuples in lexicographic order (first coordinate most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct RRangeModel {
    n_states: usize,
    length: usize,
    range: usize,
    factors: PerSite<Vec<f64>>,
}

impl RRangeModel {
    pub fn new(n_states: usize, length: usize, range: usize, factors: PerSite<Vec<f64>>) -> Result<Self> {
        if range == 0 || length <= range {
            return Err(Error::InvalidArgument(format!(
                "need T > r >= 1, got T={length}, r={range}"
            )));
        }
        if n_states < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 states, got {n_states}"
            )));
        }
        let size = (n_states as u128)
            .checked_pow(range as u32 + 1)
            .filter(|&s| s <= u32::MAX as u128)
            .ok_or(Error::CapExceeded {
                what: "r-range factor table",
                needed: u128::MAX,
                cap: u32::MAX as u128,
            })? as usize;
        let tables: Vec<&Vec<f64>> = match &factors {
            PerSite::Shared(f) => vec![f],
            PerSite::Varying(fs) => {
                if fs.len() != length - range {
                    return Err(Error::DimensionMismatch(format!(
                        "{} factor tables, expected T−r = {}",
                        fs.len(),
                        length - range
                    )));
                }
                fs.iter().collect()
            }
        };
        for f in tables {
            if f.len() != size {
                return Err(Error::DimensionMismatch(format!(
                    "factor table has {} entries, expected {size}",
                    f.len()
                )));
            }
            check_finite(f, "r-range factor")?;
        }
        Ok(RRangeModel {
            n_states,
            length,
            range,
            factors,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn factors(&self) -> &PerSite<Vec<f64>> {
        &self.factors
    }

    /// Log factor `h_s` for `s` in `1..=T−r`.
    pub fn factor(&self, s: usize) -> &[f64] {
        self.factors.get(s - 1)
    }

    /// Lexicographic index of a tuple of states.
    pub fn tuple_index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &z| acc * self.n_states + z)
    }
}

impl EnergyModel for RRangeModel {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn length(&self) -> usize {
        self.length
    }

    fn energy_unchecked(&self, z: &[usize]) -> f64 {
        let r = self.range;
        (1..=self.length - r)
            .map(|s| self.factor(s)[self.tuple_index(&z[s - 1..s + r])])
            .sum()
    }
}
