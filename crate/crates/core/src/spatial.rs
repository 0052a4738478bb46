//! Lattice fields as chains of columns.
//!
//! An `m × T` field is read as a chain of `T` columns, each column an element
//! of `F^m`. Column `t` of a configuration is encoded as an integer whose
//! digit `i` (base `|F|`, least significant first) is the state of row `i`;
//! for the ±1 Ising field this is an `m`-bit mask with bit `i` set when row
//! `i` carries `+1`.
//!
//! For the Ising field with singleton `α`, vertical pair `β` and horizontal
//! pair `δ` the column transfer matrix factors as
//!
//! ```text
//! H(u, v) = g(u) · Π_i k(u_i, v_i),   g(u) = exp{α(2n⁺(u) − m) + β(2v⁺(u) − (m − 1))}
//! ```
//!
//! with `k(a, b) = e^{δ}` when `a = b` and `e^{−δ}` otherwise, so a
//! vector-matrix product costs `m 2^m` operations instead of `4^m`. The
//! constant is `1ᵀ H^{T−1} g`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{EnergyModel, PerSite, RRangeModel};
use crate::parallel;
use crate::scaled::{
    randomized_factorize, LogValue, Orientation, RandomizedConfig, ScaleSum, ScaledNonNegMatrix, ScaledVector,
};
use crate::transfer::{MarginalTable, TransferChain};

/// Default cap on the number of column states `2^m` for vector sweeps.
pub const DEFAULT_COLUMN_CAP: usize = 1 << 20;

/// Default cap on the number of entries of a dense column transfer matrix.
pub const DEFAULT_DENSE_CAP: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialIsingModel {
    m: usize,
    length: usize,
    alpha: f64,
    beta: f64,
    delta: f64,
}

/// Counting statistics of a column `c` and of a pair of columns `(c, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SliceStatistics {
    pub n_plus: u32,
    pub n_minus: u32,
    pub v_plus: u32,
    pub v_minus: u32,
    pub n_agree: u32,
    pub n_disagree: u32,
}

fn low_bits(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

pub fn slice_statistics(c: u64, d: u64, m: usize) -> SliceStatistics {
    let mask = low_bits(m);
    let (c, d) = (c & mask, d & mask);
    let n_plus = c.count_ones();
    let pairs = m.saturating_sub(1);
    let v_plus = (!(c ^ (c >> 1)) & low_bits(pairs)).count_ones();
    let n_disagree = (c ^ d).count_ones();
    SliceStatistics {
        n_plus,
        n_minus: m as u32 - n_plus,
        v_plus,
        v_minus: pairs as u32 - v_plus,
        n_agree: m as u32 - n_disagree,
        n_disagree,
    }
}

fn check_columns(m: usize, cap: usize) -> Result<usize> {
    let states = 1u128 << m.min(127);
    if m >= 64 || states > cap as u128 {
        return Err(Error::CapExceeded {
            what: "column states",
            needed: states,
            cap: cap as u128,
        });
    }
    Ok(states as usize)
}

impl SpatialIsingModel {
    pub fn new(m: usize, length: usize, alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("lattice needs at least one row".into()));
        }
        if length < 2 {
            return Err(Error::TooShort(length));
        }
        if m >= 63 {
            return Err(Error::CapExceeded {
                what: "column states",
                needed: 1u128 << m.min(127),
                cap: DEFAULT_COLUMN_CAP as u128,
            });
        }
        if ![alpha, beta, delta].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("lattice parameters".into()));
        }
        Ok(SpatialIsingModel {
            m,
            length,
            alpha,
            beta,
            delta,
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> usize {
        self.length
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_length(&self, length: usize) -> Result<Self> {
        Self::new(self.m, length, self.alpha, self.beta, self.delta)
    }

    /// `ln g(u) = α(2n⁺ − m) + β(2v⁺ − (m − 1))`.
    pub fn ln_column_factor(&self, u: u64) -> f64 {
        let s = slice_statistics(u, u, self.m);
        self.alpha * (s.n_plus as f64 - s.n_minus as f64)
            + self.beta * (s.v_plus as f64 - s.v_minus as f64)
    }

    /// `δ(n⁺(u, v) − n⁻(u, v))`.
    pub fn ln_coupling(&self, u: u64, v: u64) -> f64 {
        let s = slice_statistics(u, v, self.m);
        self.delta * (s.n_agree as f64 - s.n_disagree as f64)
    }

    fn column_factors(&self, states: usize) -> Vec<f64> {
        parallel::map_range(states, |u| self.ln_column_factor(u as u64))
    }

    /// Column bitmask of a configuration of one column given as state
    /// indices (`0 ↦ −1`, `1 ↦ +1`), row 1 first.
    pub fn column_mask(states: &[usize]) -> u64 {
        states
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| acc | ((s as u64 & 1) << i))
    }
}

/// `H_t` for `t` in `1..=T`: `H_t(u, v) = g(u) exp{δ(t)(n⁺(u,v) − n⁻(u,v))}`
/// with `δ(T) = 0`.
pub fn build_spatial_transfer(sm: &SpatialIsingModel, t: usize, cap: usize) -> Result<ScaledNonNegMatrix> {
    if t == 0 || t > sm.length {
        return Err(Error::SiteOutOfRange {
            site: t,
            length: sm.length,
        });
    }
    let n = check_columns(sm.m, usize::MAX)?;
    let entries = (n as u128) * (n as u128);
    if entries > cap as u128 {
        return Err(Error::CapExceeded {
            what: "dense column transfer matrix",
            needed: entries,
            cap: cap as u128,
        });
    }
    let delta = if t < sm.length { sm.delta } else { 0.0 };
    let m = sm.m;
    let ln_g = sm.column_factors(n);
    let g_max = ln_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let row: Vec<f64> = ln_g.iter().map(|x| (x - g_max).exp()).collect();
    // coupling by number of disagreeing rows k: δ(m − 2k), shifted by |δ|m
    let coupling: Vec<f64> = (0..=m)
        .map(|k| (delta * (m as f64 - 2.0 * k as f64) - delta.abs() * m as f64).exp())
        .collect();
    let mut values = vec![0.0; n * n];
    parallel::fill_rows(&mut values, n, |u, out| {
        for (v, x) in out.iter_mut().enumerate() {
            *x = row[u] * coupling[(u ^ v).count_ones() as usize];
        }
    });
    ScaledNonNegMatrix::from_parts(n, n, values, g_max + delta.abs() * m as f64)
}

/// `x ↦ x · K^{⊗m}` in place, with `K = [[e^{δ}, e^{−δ}], [e^{−δ}, e^{δ}]]`
/// divided by `e^{|δ|}` per factor. Returns the log scale removed.
fn kronecker_apply(x: &mut [f64], m: usize, delta: f64) -> f64 {
    let same = (delta - delta.abs()).exp();
    let other = (-delta - delta.abs()).exp();
    for bit in 0..m {
        let half = 1usize << bit;
        parallel::for_each_chunk(x, 2 * half, |chunk| {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (p, q) = (*a, *b);
                *a = p * same + q * other;
                *b = p * other + q * same;
            }
        });
    }
    delta.abs() * m as f64
}

fn renormalize(x: &mut [f64]) -> f64 {
    let max = x.iter().copied().fold(0.0f64, f64::max);
    if max > 0.0 {
        let inv = 1.0 / max;
        x.iter_mut().for_each(|v| *v *= inv);
        max.ln()
    } else {
        0.0
    }
}

/// Sweep direction for [`spatial_constant_directed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepDirection {
    LeftToRight,
    RightToLeft,
}

/// `1ᵀ H^{T−1} g` by column sweeps in the given direction.
pub fn spatial_constant_directed(sm: &SpatialIsingModel, direction: SweepDirection, cap: usize) -> Result<LogValue> {
    let n = check_columns(sm.m, cap)?;
    let ln_g = sm.column_factors(n);
    let g_max = ln_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let g: Vec<f64> = ln_g.iter().map(|x| (x - g_max).exp()).collect();
    // left to right starts from 1ᵀ, right to left from g
    let mut scale = ScaleSum::default();
    let mut x = match direction {
        SweepDirection::LeftToRight => vec![1.0; n],
        SweepDirection::RightToLeft => {
            scale.add(g_max);
            g.clone()
        }
    };
    for _ in 1..sm.length {
        match direction {
            SweepDirection::LeftToRight => {
                // row vector times H: scale by g, then mix
                x.iter_mut().zip(&g).for_each(|(a, b)| *a *= b);
                scale.add(g_max);
                scale.add(kronecker_apply(&mut x, sm.m, sm.delta));
            }
            SweepDirection::RightToLeft => {
                // H times column vector: mix (K is symmetric), then scale by g
                scale.add(kronecker_apply(&mut x, sm.m, sm.delta));
                x.iter_mut().zip(&g).for_each(|(a, b)| *a *= b);
                scale.add(g_max);
            }
        }
        scale.add(renormalize(&mut x));
    }
    let total: f64 = match direction {
        SweepDirection::LeftToRight => {
            scale.add(g_max);
            x.iter().zip(&g).map(|(a, b)| a * b).sum()
        }
        SweepDirection::RightToLeft => x.iter().sum::<f64>(),
    };
    scale.add(total.ln());
    Ok(LogValue::from_ln(scale.value()))
}

/// `Σ_z exp U(z)` over all `2^{mT}` fields.
pub fn spatial_constant(sm: &SpatialIsingModel) -> Result<LogValue> {
    spatial_constant_directed(sm, SweepDirection::LeftToRight, DEFAULT_COLUMN_CAP)
}

/// The field as a dense chain of columns: `T − 2` copies of `H` followed by
/// `H diag(g)`.
pub fn spatial_chain(sm: &SpatialIsingModel, cap: usize) -> Result<TransferChain> {
    let body = build_spatial_transfer(sm, 1, cap)?;
    let n = body.rows();
    let ln_g = sm.column_factors(n);
    let g = ScaledVector::from_ln(&ln_g, Orientation::Row);
    let last = body.scale_columns(&g)?;
    TransferChain::uniform(body, sm.length - 1, Some(last))
}

/// Constant of a low-rank approximation of `H`, with the relative Frobenius
/// error of that approximation.
pub fn spatial_constant_low_rank(
    sm: &SpatialIsingModel,
    config: RandomizedConfig,
    cap: usize,
) -> Result<(LogValue, f64)> {
    let h = build_spatial_transfer(sm, 1, cap)?;
    let factors = randomized_factorize(&h, config)?;
    let error = factors.relative_frobenius_error(&h);
    let n = h.rows();
    let g = ScaledVector::from_ln(&sm.column_factors(n), Orientation::Column);
    let ones = ScaledVector::ones(n, Orientation::Row);
    let c = factors.power_form((sm.length - 1) as u64, &ones, &g)?;
    Ok((c, error))
}

/// Law of the columns in `sites`; states of the table are column masks.
pub fn spatial_subset_marginal(sm: &SpatialIsingModel, sites: &[usize], cap: usize) -> Result<MarginalTable> {
    spatial_chain(sm, cap)?.subset_marginal(sites, cap)
}

impl EnergyModel for SpatialIsingModel {
    /// Column states.
    fn n_states(&self) -> usize {
        1 << self.m
    }

    fn length(&self) -> usize {
        self.length
    }

    /// Site-by-site sum of the lattice potentials.
    fn energy_unchecked(&self, z: &[usize]) -> f64 {
        let spin = |t: usize, i: usize| if (z[t] >> i) & 1 == 1 { 1.0 } else { -1.0 };
        let mut u = 0.0;
        for t in 0..self.length {
            for i in 0..self.m {
                u += self.alpha * spin(t, i);
                if i + 1 < self.m {
                    u += self.beta * spin(t, i) * spin(t, i + 1);
                }
                if t + 1 < self.length {
                    u += self.delta * spin(t, i) * spin(t + 1, i);
                }
            }
        }
        u
    }
}

/// A slice potential `Ψ_h(c_{t−h}, …, c_t)` over `h + 1` column codes.
pub type SlicePotential = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

/// `U(z) = Σ_{h=0}^{r} Σ_{t=h+1}^{T} Ψ_h(z_{t−h}, …, z_t)` on an `m × T` field
/// with `|F|` states per site.
#[derive(Clone)]
pub struct SlicePotentialModel {
    m: usize,
    length: usize,
    site_states: usize,
    potentials: Vec<SlicePotential>,
}

impl std::fmt::Debug for SlicePotentialModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SlicePotentialModel")
            .field("m", &self.m)
            .field("length", &self.length)
            .field("site_states", &self.site_states)
            .field("height", &self.height())
            .finish()
    }
}

impl SlicePotentialModel {
    /// `potentials[h]` is `Ψ_h`; the height is `potentials.len() − 1`.
    pub fn new(m: usize, length: usize, site_states: usize, potentials: Vec<SlicePotential>) -> Result<Self> {
        if potentials.is_empty() {
            return Err(Error::InvalidArgument("need at least one slice potential".into()));
        }
        if m == 0 || site_states < 2 {
            return Err(Error::InvalidArgument(format!(
                "need m >= 1 and at least 2 site states, got m={m}, |F|={site_states}"
            )));
        }
        if length < potentials.len() {
            return Err(Error::InvalidArgument(format!(
                "height {} needs more than {length} columns",
                potentials.len() - 1
            )));
        }
        u32::try_from(m)
            .ok()
            .and_then(|m| site_states.checked_pow(m))
            .ok_or(Error::CapExceeded {
                what: "column states",
                needed: u128::MAX,
                cap: usize::MAX as u128,
            })?;
        Ok(SlicePotentialModel {
            m,
            length,
            site_states,
            potentials,
        })
    }

    /// The Ising field as slice potentials of height 1.
    pub fn ising(sm: &SpatialIsingModel) -> Self {
        let single = *sm;
        let pair = *sm;
        SlicePotentialModel {
            m: sm.m,
            length: sm.length,
            site_states: 2,
            potentials: vec![
                Arc::new(move |c: &[usize]| single.ln_column_factor(c[0] as u64)),
                Arc::new(move |c: &[usize]| pair.ln_coupling(c[0] as u64, c[1] as u64)),
            ],
        }
    }

    pub fn height(&self) -> usize {
        self.potentials.len() - 1
    }

    pub fn column_states(&self) -> usize {
        self.site_states.pow(self.m as u32)
    }
}

impl EnergyModel for SlicePotentialModel {
    fn n_states(&self) -> usize {
        self.column_states()
    }

    fn length(&self) -> usize {
        self.length
    }

    fn energy_unchecked(&self, z: &[usize]) -> f64 {
        let mut u = 0.0;
        for (h, psi) in self.potentials.iter().enumerate() {
            for t in h..self.length {
                u += psi(&z[t - h..=t]);
            }
        }
        u
    }
}

/// The slice model as a range-`r` model on column states. Each term
/// `Ψ_h(z_{t−h}, …, z_t)` goes to the window starting at
/// `min(t − h, T − r)`.
pub fn lift_slice_model(spm: &SlicePotentialModel, cap: usize) -> Result<RRangeModel> {
    let n = spm.column_states();
    let r = spm.height().max(1);
    let entries = (n as u128).checked_pow(r as u32 + 1).unwrap_or(u128::MAX);
    if entries > cap as u128 {
        return Err(Error::CapExceeded {
            what: "slice factor table",
            needed: entries,
            cap: cap as u128,
        });
    }
    let entries = entries as usize;
    let t_max = spm.length;
    let windows = t_max - r;
    let mut factors = vec![vec![0.0; entries]; windows];
    // terms as (h, t) with 1-based t, grouped by window
    for (h, psi) in spm.potentials.iter().enumerate() {
        for t in h + 1..=t_max {
            let s = (t - h).min(windows);
            let offset = t - h - s;
            let table = &mut factors[s - 1];
            let mut cols = vec![0; h + 1];
            for (idx, slot) in table.iter_mut().enumerate() {
                for (k, c) in cols.iter_mut().enumerate() {
                    *c = idx / n.pow((r - offset - k) as u32) % n;
                }
                *slot += psi(&cols);
            }
        }
    }
    RRangeModel::new(n, t_max, r, PerSite::Varying(factors))
}
