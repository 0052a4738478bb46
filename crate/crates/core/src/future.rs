//! The future-conditional recursion.
//!
//! For a singleton/pair model let `H_t(u, v) = exp{θ_t(u) + Ψ_t(u, v)}`, so
//! that `H_T(u, v) = exp θ_T(u)` does not depend on `v` (`Ψ_T ≡ 0`). The
//! contribution vector of a prefix is
//!
//! ```text
//! Γ_1(z_1)(u)        = H_1(z_1, u)
//! Γ_t(z_1..z_t)(u)   = Γ_{t−1}(z_1..z_{t−1})(z_t) · H_t(z_t, u)
//! ```
//!
//! i.e. the exponential of the prefix energy completed by its interaction
//! with a candidate next state `u`. With `D_T = e_1` and `D_{t−1} = H_t D_t`
//! the prefix marginal is `π_1^t = C⁻¹ Γ_t D_t`.
//!
//! `D_T` selects a single state. This works because `Γ_T` is the constant
//! vector `exp U(z)`: any unit basis vector would do.
//!
//! The constant follows from the marginal at `t = 1` summed over `z_1`:
//! `C = 1ᵀ H_1 H_2 ⋯ H_T D_T`. The shorter `D_Tᵀ (Π_{s≥2} H_s) D_T` found in
//! some write-ups drops `θ_1`, `Ψ_1` and the sum over `z_1`, and does not
//! reproduce the transfer-matrix constant.
//!
//! The two-lag extension runs the same recursion on pairs of future states.

use crate::error::{Error, Result};
use crate::model::{check_configuration, EnergyModel, LogTable, PerSite, RRangeModel, SingletonPairModel};
use crate::scaled::{log_sum_exp, LogValue, Orientation, ScaledNonNegMatrix, ScaledVector};
use crate::transfer::TransferChain;

/// `Γ_t` for a fixed prefix `z_1..z_t`.
#[derive(Clone, Debug)]
pub struct GammaVector {
    site: usize,
    values: ScaledVector,
}

impl GammaVector {
    /// The `t` of `Γ_t`.
    pub fn site(&self) -> usize {
        self.site
    }

    pub fn values(&self) -> &ScaledVector {
        &self.values
    }
}

fn check_state(state: usize, n: usize) -> Result<()> {
    if state >= n {
        return Err(Error::StateOutOfRange { state, n_states: n });
    }
    Ok(())
}

/// `H_t` as a matrix, `t` in `1..=T`.
pub fn future_matrix(m: &SingletonPairModel, t: usize) -> Result<ScaledNonNegMatrix> {
    let n = m.n_states();
    let ln: Vec<f64> = (0..n * n).map(|i| m.local(t, i / n, i % n)).collect();
    ScaledNonNegMatrix::from_log_table(n, n, &ln)
}

fn row_of_h(m: &SingletonPairModel, t: usize, u: usize, shift: f64) -> ScaledVector {
    let ln: Vec<f64> = (0..m.n_states()).map(|v| shift + m.local(t, u, v)).collect();
    ScaledVector::from_ln(&ln, Orientation::Row)
}

pub fn gamma_init(m: &SingletonPairModel, z1: usize) -> Result<GammaVector> {
    check_state(z1, m.n_states())?;
    Ok(GammaVector {
        site: 1,
        values: row_of_h(m, 1, z1, 0.0),
    })
}

/// `Γ_t` from `Γ_{t−1}`: picks component `z_t` and scales row `z_t` of `H_t`.
pub fn gamma_step(m: &SingletonPairModel, g: &GammaVector, z_t: usize) -> Result<GammaVector> {
    check_state(z_t, m.n_states())?;
    let t = g.site + 1;
    if t > m.length() {
        return Err(Error::SiteOutOfRange {
            site: t,
            length: m.length(),
        });
    }
    Ok(GammaVector {
        site: t,
        values: row_of_h(m, t, z_t, g.values.ln_at(z_t)),
    })
}

/// `Γ_t(z_1, …, z_t)` for a whole prefix.
pub fn gamma_prefix(m: &SingletonPairModel, prefix: &[usize]) -> Result<GammaVector> {
    let (&first, rest) = prefix.split_first().ok_or(Error::SiteOutOfRange {
        site: 0,
        length: m.length(),
    })?;
    let mut g = gamma_init(m, first)?;
    for &z in rest {
        g = gamma_step(m, &g, z)?;
    }
    Ok(g)
}

/// `H_1, …, H_T` as a chain of `T` steps.
fn future_steps(m: &SingletonPairModel) -> Result<TransferChain> {
    let t_max = m.length();
    if m.is_homogeneous() {
        TransferChain::uniform(
            future_matrix(m, 1)?,
            t_max,
            Some(future_matrix(m, t_max)?),
        )
    } else {
        TransferChain::varying(
            (1..=t_max)
                .map(|t| future_matrix(m, t))
                .collect::<Result<_>>()?,
        )
    }
}

fn selector(n: usize) -> ScaledVector {
    ScaledVector::basis(n, 0, Orientation::Column)
}

/// `D_1, …, D_T` (index `t − 1` holds `D_t`).
pub fn d_vectors(m: &SingletonPairModel) -> Result<Vec<ScaledVector>> {
    let t_max = m.length();
    let mut out = Vec::with_capacity(t_max);
    let mut d = selector(m.n_states());
    out.push(d.clone());
    for t in (2..=t_max).rev() {
        d = future_matrix(m, t)?.mul_vector(&d)?;
        out.push(d.clone());
    }
    out.reverse();
    Ok(out)
}

/// `C = 1ᵀ H_1 ⋯ H_T D_T`.
pub fn constant_via_future(m: &SingletonPairModel) -> Result<LogValue> {
    let steps = future_steps(m)?;
    let n = m.n_states();
    let row = steps.apply_left(&ScaledVector::ones(n, Orientation::Row), 1, m.length())?;
    row.dot(&selector(n))
}

/// `π_1^t(z_1, …, z_t) = C⁻¹ Γ_t D_t`.
pub fn marginal_via_future(m: &SingletonPairModel, t: usize, prefix: &[usize]) -> Result<f64> {
    if t == 0 || t > m.length() {
        return Err(Error::SiteOutOfRange {
            site: t,
            length: m.length(),
        });
    }
    check_configuration(prefix, t, m.n_states())?;
    let steps = future_steps(m)?;
    let d_t = steps.apply_right(t + 1, m.length(), &selector(m.n_states()))?;
    let c = constant_via_future(m)?;
    let g = gamma_prefix(m, prefix)?;
    Ok(g.values.dot(&d_t)?.div(c).to_f64())
}

/// `π(z) ∝ exp{Σ θ_t(z_t) + Σ Ψ_{1,t}(z_t, z_{t+1}) + Σ Ψ_{2,t}(z_t, z_{t+2})}`
/// with `T` singleton vectors, `T − 1` lag-1 tables and `T − 2` lag-2 tables.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLagModel {
    n_states: usize,
    length: usize,
    theta: PerSite<Vec<f64>>,
    lag1: PerSite<LogTable>,
    lag2: PerSite<LogTable>,
}

impl TwoLagModel {
    pub fn homogeneous(length: usize, theta: Vec<f64>, lag1: LogTable, lag2: LogTable) -> Result<Self> {
        Self::build(
            length,
            PerSite::Shared(theta),
            PerSite::Shared(lag1),
            PerSite::Shared(lag2),
        )
    }

    pub fn explicit(theta: Vec<Vec<f64>>, lag1: Vec<LogTable>, lag2: Vec<LogTable>) -> Result<Self> {
        let length = theta.len();
        Self::build(
            length,
            PerSite::Varying(theta),
            PerSite::Varying(lag1),
            PerSite::Varying(lag2),
        )
    }

    fn build(
        length: usize,
        theta: PerSite<Vec<f64>>,
        lag1: PerSite<LogTable>,
        lag2: PerSite<LogTable>,
    ) -> Result<Self> {
        if length < 3 {
            return Err(Error::InvalidArgument(format!(
                "a two-lag model needs at least 3 sites, got {length}"
            )));
        }
        // reuse the singleton/pair validation for θ and Ψ_1
        let base = SingletonPairModel::build(length, theta.clone(), lag1.clone())?;
        let n = base.n_states();
        match &lag2 {
            PerSite::Shared(t) if t.n() != n => {
                return Err(Error::DimensionMismatch("lag-2 table size differs".into()))
            }
            PerSite::Varying(ts) if ts.len() + 2 != length || ts.iter().any(|t| t.n() != n) => {
                return Err(Error::DimensionMismatch(format!(
                    "{} lag-2 tables for {length} sites",
                    ts.len()
                )))
            }
            _ => {}
        }
        Ok(TwoLagModel {
            n_states: n,
            length,
            theta,
            lag1,
            lag2,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn theta(&self, t: usize) -> &[f64] {
        self.theta.get(t - 1)
    }

    /// `Ψ_{1,t}(u, v)`, zero for `t = T`.
    pub fn lag1(&self, t: usize, u: usize, v: usize) -> f64 {
        if t >= self.length {
            0.0
        } else {
            self.lag1.get(t - 1).get(u, v)
        }
    }

    /// `Ψ_{2,t}(u, w)`, zero for `t ≥ T − 1`.
    pub fn lag2(&self, t: usize, u: usize, w: usize) -> f64 {
        if t + 1 >= self.length {
            0.0
        } else {
            self.lag2.get(t - 1).get(u, w)
        }
    }

    /// The model without its lag-2 tables.
    pub fn lag1_part(&self) -> SingletonPairModel {
        SingletonPairModel::build(self.length, self.theta.clone(), self.lag1.clone())
            .expect("validated at construction")
    }

    /// The same law as a range-2 model: factor `s` carries `θ_s`, `Ψ_{1,s}`
    /// and `Ψ_{2,s}`, the last factor also the trailing terms.
    pub fn to_r_range(&self) -> RRangeModel {
        let n = self.n_states;
        let t_max = self.length;
        let factor = |s: usize| -> Vec<f64> {
            (0..n * n * n)
                .map(|i| {
                    let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
                    let mut h = self.theta(s)[a] + self.lag1(s, a, b) + self.lag2(s, a, c);
                    if s == t_max - 2 {
                        h += self.theta(s + 1)[b] + self.lag1(s + 1, b, c) + self.theta(s + 2)[c];
                    }
                    h
                })
                .collect()
        };
        let factors = (1..=t_max - 2).map(factor).collect();
        RRangeModel::new(n, t_max, 2, PerSite::Varying(factors)).expect("finite factors")
    }

    fn pair_states(&self, cap: usize) -> Result<usize> {
        let states = self.n_states * self.n_states;
        if states > cap {
            return Err(Error::CapExceeded {
                what: "two-lag state pairs",
                needed: states as u128,
                cap: cap as u128,
            });
        }
        Ok(states)
    }

    /// `ln K_t((u, v), (v, w)) = θ_t(u) + Ψ_{1,t}(u, v) + Ψ_{2,t}(u, w)`.
    fn ln_step(&self, t: usize, u: usize, v: usize, w: usize) -> f64 {
        self.theta(t)[u] + self.lag1(t, u, v) + self.lag2(t, u, w)
    }

    /// `D_t(u, v)` over pairs, `t` from `T` down to `stop`. `D_T` selects the
    /// pair `(0, 0)`.
    fn d_pair(&self, stop: usize) -> ScaledVector {
        let n = self.n_states;
        let mut d = ScaledVector::basis(n * n, 0, Orientation::Column);
        for t in (stop + 1..=self.length).rev() {
            let ln: Vec<f64> = (0..n * n)
                .map(|i| {
                    let (u, v) = (i / n, i % n);
                    let terms: Vec<f64> = (0..n)
                        .map(|w| self.ln_step(t, u, v, w) + d.ln_at(v * n + w))
                        .collect();
                    log_sum_exp(&terms)
                })
                .collect();
            d = ScaledVector::from_ln(&ln, Orientation::Column);
        }
        d
    }

    /// `Γ_t(z_1..z_t)(u, v) = exp U*_t`, over pairs `(z_{t+1}, z_{t+2})`.
    pub fn gamma(&self, prefix: &[usize]) -> Result<ScaledVector> {
        let n = self.n_states;
        let t_max = self.length;
        if prefix.is_empty() || prefix.len() > t_max {
            return Err(Error::SiteOutOfRange {
                site: prefix.len(),
                length: t_max,
            });
        }
        if let Some(&state) = prefix.iter().find(|&&z| z >= n) {
            return Err(Error::StateOutOfRange { state, n_states: n });
        }
        let mut ln = vec![0.0; n * n];
        for (i, &z) in prefix.iter().enumerate() {
            let t = i + 1;
            ln = (0..n * n)
                .map(|j| {
                    let (u, v) = (j / n, j % n);
                    ln[z * n + u] + self.ln_step(t, z, u, v)
                })
                .collect();
        }
        Ok(ScaledVector::from_ln(&ln, Orientation::Row))
    }

    /// `C = Σ_{(z_1, z_2)} D_0(z_1, z_2)`.
    pub fn constant(&self, cap: usize) -> Result<LogValue> {
        self.pair_states(cap)?;
        Ok(self.d_pair(0).total())
    }

    /// `π_1^t(z_1, …, z_t) = C⁻¹ Γ_t · D_t`.
    pub fn marginal(&self, t: usize, prefix: &[usize], cap: usize) -> Result<f64> {
        self.pair_states(cap)?;
        if t == 0 || t > self.length {
            return Err(Error::SiteOutOfRange {
                site: t,
                length: self.length,
            });
        }
        check_configuration(prefix, t, self.n_states)?;
        let g = self.gamma(prefix)?;
        let d = self.d_pair(t);
        let c = self.d_pair(0).total();
        Ok(g.dot(&d)?.div(c).to_f64())
    }
}

impl EnergyModel for TwoLagModel {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn length(&self) -> usize {
        self.length
    }

    fn energy_unchecked(&self, z: &[usize]) -> f64 {
        let t_max = self.length;
        let mut u = 0.0;
        for t in 1..=t_max {
            u += self.theta(t)[z[t - 1]];
            if t < t_max {
                u += self.lag1(t, z[t - 1], z[t]);
            }
            if t + 2 <= t_max {
                u += self.lag2(t, z[t - 1], z[t + 1]);
            }
        }
        u
    }
}

pub fn two_lag_constant(m: &TwoLagModel, cap: usize) -> Result<LogValue> {
    m.constant(cap)
}

pub fn two_lag_marginal(m: &TwoLagModel, t: usize, prefix: &[usize], cap: usize) -> Result<f64> {
    m.marginal(t, prefix, cap)
}
