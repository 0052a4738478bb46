//! Dichotomous thinning of the binary Ising chain.
//!
//! The chain lives on `{−1, +1}` with `h_s(x, y) = αx + βxy` for every step
//! (the last site carries no singleton). Index encoding: `−1 ↦ 0`, `+1 ↦ 1`.
//!
//! Keeping every other site of a chain with transition `P` leaves a chain
//! with transition `P²`, which is again a bilateral Ising field with new
//! parameters. For `T = 2^r + 1` the nested subsets `S_{r+1} = {1..T} ⊃ S_r
//! ⊃ … ⊃ S_1 = {1, T}` halve the sites at each level, and the joint law
//! telescopes into interior conditionals of every level times the law of the
//! two end points:
//!
//! ```text
//! π(z) = Π_{j=r+1}^{2} Π_{s ∈ S_j ∖ S_{j−1}} π_j(z_s | z_{s−d_j}, z_{s+d_j}) · π_1(z_1, z_T)
//! ```
//!
//! The interior conditionals come from the ladder `(α_j, β_j)`; the end-point
//! law is computed exactly by the transfer machinery.
//!
//! Transition pairs list `+1` first: `p = P(+1 → +1)`, `q = P(−1 → −1)`, so
//! that `α = ½ ln(p/q)` and `β = ¼ ln(pq / ((1−p)(1−q)))`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ChainModel, EnergyModel, LogTable};
use crate::scaled::LogValue;
use crate::transfer::{TransferChain, DEFAULT_TABLE_CAP};

/// Spin of a state index.
pub fn spin(state: usize) -> f64 {
    if state == 0 {
        -1.0
    } else {
        1.0
    }
}

/// State index of a spin.
pub fn state_of_spin(spin: i32) -> Result<usize> {
    match spin {
        -1 => Ok(0),
        1 => Ok(1),
        _ => Err(Error::InvalidArgument(format!("spin must be -1 or +1, got {spin}"))),
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingChainParams {
    pub alpha: f64,
    pub beta: f64,
}

impl IsingChainParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::NonFinite("Ising parameters".into()));
        }
        Ok(IsingChainParams { alpha, beta })
    }

    /// `h(x, y) = αx + βxy` on state indices.
    pub fn log_table(&self) -> LogTable {
        LogTable::from_fn(2, |u, v| {
            let (x, y) = (spin(u), spin(v));
            self.alpha * x + self.beta * x * y
        })
        .expect("finite parameters")
    }

    pub fn chain_model(&self, length: usize) -> Result<ChainModel> {
        ChainModel::homogeneous(length, self.log_table())?
            .with_labels(vec!["-1".to_string(), "+1".to_string()])
    }

    /// Parameters of the chain thinned to every other site.
    pub fn thinned(&self) -> IsingChainParams {
        let (a, b) = (self.alpha, self.beta);
        let alpha = 0.5 * (softplus(2.0 * a + 4.0 * b) - softplus(-2.0 * a + 4.0 * b));
        let beta = if b == 0.0 {
            0.0
        } else {
            let ln_ratio =
                4.0 * b - 2.0 * a + 2.0 * (-4.0 * b).exp_m1().abs().ln() - 2.0 * softplus(-2.0 * a);
            0.25 * softplus(ln_ratio)
        };
        IsingChainParams { alpha, beta }
    }
}

/// Staying probabilities of a two-state chain, `+1` first.
///
/// The complements are kept alongside so that chains close to deterministic
/// keep full relative precision in `1 − p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionPair {
    p: f64,
    q: f64,
    p_leave: f64,
    q_leave: f64,
}

impl TransitionPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Self::with_complements(p, q, 1.0 - p, 1.0 - q)
    }

    fn with_complements(p: f64, q: f64, p_leave: f64, q_leave: f64) -> Result<Self> {
        let inside = |x: f64| x > 0.0 && x < 1.0;
        if !(inside(p) && inside(q) && inside(p_leave) && inside(q_leave)) {
            return Err(Error::InvalidArgument(format!(
                "staying probabilities must lie in (0, 1), got p={p}, q={q}"
            )));
        }
        Ok(TransitionPair {
            p,
            q,
            p_leave,
            q_leave,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `[[p, 1−p], [1−q, q]]` in `+1`-first order.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.p, self.p_leave], [self.q_leave, self.q]]
    }

    /// Two steps of the chain.
    pub fn squared(&self) -> Result<TransitionPair> {
        let (p, q, pl, ql) = (self.p, self.q, self.p_leave, self.q_leave);
        Self::with_complements(p * p + pl * ql, q * q + pl * ql, pl * (p + q), ql * (p + q))
    }
}

pub fn field_from_transition(tp: &TransitionPair) -> IsingChainParams {
    let (lp, lq) = (tp.p.ln(), tp.q.ln());
    let (lpl, lql) = (tp.p_leave.ln(), tp.q_leave.ln());
    IsingChainParams {
        alpha: 0.5 * (lp - lq),
        beta: 0.25 * (lp + lq - lpl - lql),
    }
}

/// The stationary chain of `H(u, v) = exp(αu + βuv)`:
/// `P(u, v) = H(u, v) φ(v) / (λ φ(u))` with Perron pair `(λ, φ)`.
pub fn transition_from_field(fp: &IsingChainParams) -> Result<TransitionPair> {
    let (a_, b_) = (fp.alpha, fp.beta);
    // entries of H in +1-first order, all divided by exp(|α| + |β|)
    let shift = a_.abs() + b_.abs();
    let a = (a_ + b_ - shift).exp();
    let b = (a_ - b_ - shift).exp();
    let c = (-a_ - b_ - shift).exp();
    let d = (-a_ + b_ - shift).exp();
    let s = ((a - d).powi(2) + 4.0 * b * c).sqrt();
    let lambda = 0.5 * (a + d + s);
    // λ − a and λ − d without cancellation
    let (lam_a, lam_d) = if a >= d {
        (2.0 * b * c / (s + a - d), 0.5 * (a - d + s))
    } else {
        (0.5 * (d - a + s), 2.0 * b * c / (s + d - a))
    };
    TransitionPair::with_complements(a / lambda, d / lambda, lam_a / lambda, lam_d / lambda)
}

/// `π(z_center | z_left, z_right) = exp(αz + βz(l + r)) / (2 cosh(α + β(l + r)))`.
pub fn center_conditional(fp: &IsingChainParams, z_left: usize, z_right: usize, z_center: usize) -> Result<f64> {
    for s in [z_left, z_right, z_center] {
        if s > 1 {
            return Err(Error::StateOutOfRange { state: s, n_states: 2 });
        }
    }
    Ok(ln_center_conditional(fp, z_left, z_right, z_center).exp())
}

fn ln_center_conditional(fp: &IsingChainParams, l: usize, r: usize, z: usize) -> f64 {
    let field = fp.alpha + fp.beta * (spin(l) + spin(r));
    let x = spin(z) * field;
    // x − ln(e^x + e^{−x})
    -softplus(-2.0 * x)
}

/// `(α_j, β_j)` for `j = r+1` down to `1`, with the nested subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct DichotomousLadder {
    r: usize,
    levels: Vec<IsingChainParams>,
}

pub fn build_ladder(fp: IsingChainParams, r: usize) -> Result<DichotomousLadder> {
    if r == 0 || r > 40 {
        return Err(Error::InvalidArgument(format!(
            "ladder depth must be in 1..=40, got {r}"
        )));
    }
    let mut levels = Vec::with_capacity(r + 1);
    levels.push(fp);
    for _ in 0..r {
        let next = levels.last().expect("non-empty").thinned();
        levels.push(next);
    }
    Ok(DichotomousLadder { r, levels })
}

impl DichotomousLadder {
    pub fn depth(&self) -> usize {
        self.r
    }

    /// `T = 2^r + 1`.
    pub fn length(&self) -> usize {
        (1usize << self.r) + 1
    }

    fn check_level(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.r + 1 {
            return Err(Error::InvalidArgument(format!(
                "level {j} outside 1..={}",
                self.r + 1
            )));
        }
        Ok(())
    }

    /// `(α_j, β_j)`, `j` in `1..=r+1`.
    pub fn level(&self, j: usize) -> Result<IsingChainParams> {
        self.check_level(j)?;
        Ok(self.levels[self.r + 1 - j])
    }

    /// Spacing of the sites of `S_j`.
    pub fn spacing(&self, j: usize) -> usize {
        1 << (self.r + 1 - j)
    }

    /// `S_j` as 1-based sites.
    pub fn subset(&self, j: usize) -> Result<Vec<usize>> {
        self.check_level(j)?;
        Ok((1..=self.length()).step_by(self.spacing(j)).collect())
    }

    /// `j,alpha_j,beta_j` rows, top level first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,alpha_j,beta_j\n");
        for (i, l) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "{},{:.15e},{:.15e}", self.r + 1 - i, l.alpha, l.beta);
        }
        out
    }

    /// `ln π_j(z_{S_j})` for states given on `S_j` (in site order).
    fn ln_marginal(&self, fp: &IsingChainParams, j: usize, states: &[usize]) -> Result<f64> {
        let sites = self.subset(j)?;
        if states.len() != sites.len() {
            return Err(Error::LengthMismatch {
                expected: sites.len(),
                got: states.len(),
            });
        }
        if let Some(&state) = states.iter().find(|&&s| s > 1) {
            return Err(Error::StateOutOfRange { state, n_states: 2 });
        }
        let mut ln = 0.0;
        // level k thins S_k to S_{k−1}: odd positions of S_k are interior
        let mut current: Vec<usize> = states.to_vec();
        for k in (2..=j).rev() {
            let params = self.level(k)?;
            for i in (1..current.len()).step_by(2) {
                ln += ln_center_conditional(&params, current[i - 1], current[i + 1], current[i]);
            }
            current = current.iter().step_by(2).copied().collect();
        }
        let chain = TransferChain::from_model(&fp.chain_model(self.length())?);
        let ends = chain.subset_marginal(&[1, self.length()], DEFAULT_TABLE_CAP)?;
        Ok(ln + ends.get(&current)?.ln())
    }
}

/// `π(z)` through the ladder, `z` of length `2^r + 1`.
pub fn joint_via_dichotomy(fp: IsingChainParams, r: usize, z: &[usize]) -> Result<f64> {
    let ladder = build_ladder(fp, r)?;
    Ok(ladder.ln_marginal(&fp, r + 1, z)?.exp())
}

/// `π_{S_j}(z_{S_j})` through the ladder levels `j` down to `1`.
pub fn dichotomous_marginal(fp: IsingChainParams, r: usize, j: usize, z: &[usize]) -> Result<f64> {
    let ladder = build_ladder(fp, r)?;
    Ok(ladder.ln_marginal(&fp, j, z)?.exp())
}

/// `C = exp U(z) / π(z)` at the all-`+1` configuration.
pub fn constant_via_dichotomy(fp: IsingChainParams, r: usize) -> Result<LogValue> {
    let ladder = build_ladder(fp, r)?;
    let t = ladder.length();
    let z = vec![1; t];
    let energy = fp.chain_model(t)?.energy(&z)?;
    Ok(LogValue::from_ln(energy - ladder.ln_marginal(&fp, r + 1, &z)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_conditional, for_each_configuration, EnumerationBudget};
    use crate::transfer::normalizing_constant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(a: f64, b: f64) -> IsingChainParams {
        IsingChainParams::new(a, b).unwrap()
    }

    #[test]
    fn fair_coin() {
        let f = field_from_transition(&TransitionPair::new(0.5, 0.5).unwrap());
        assert_eq!((f.alpha, f.beta), (0.0, 0.0));
        let t = transition_from_field(&params(0.0, 0.0)).unwrap();
        assert!((t.p() - 0.5).abs() < 1e-15 && (t.q() - 0.5).abs() < 1e-15);
        let f = field_from_transition(&TransitionPair::new(0.3, 0.3).unwrap());
        assert_eq!(f.alpha, 0.0);
    }

    #[test]
    fn round_trip() {
        let tp = TransitionPair::new(0.8, 0.4).unwrap();
        let back = transition_from_field(&field_from_transition(&tp)).unwrap();
        assert!((back.p() - 0.8).abs() < 1e-12 && (back.q() - 0.4).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let tp = TransitionPair::new(rng.random_range(0.001..0.999), rng.random_range(0.001..0.999))
                .unwrap();
            let back = transition_from_field(&field_from_transition(&tp)).unwrap();
            assert!((back.p() - tp.p()).abs() <= 1e-10);
            assert!((back.q() - tp.q()).abs() <= 1e-10);
            let m = back.matrix();
            assert!((m[0][0] + m[0][1] - 1.0).abs() <= 1e-14);
            assert!((m[1][0] + m[1][1] - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn invalid_transition() {
        assert!(TransitionPair::new(0.0, 0.5).is_err());
        assert!(TransitionPair::new(0.5, 1.0).is_err());
    }

    #[test]
    fn ladder_fixed_points() {
        let l = build_ladder(params(1.0, 0.0), 4).unwrap();
        for j in 1..=5 {
            let p = l.level(j).unwrap();
            assert!((p.alpha - 1.0).abs() < 1e-14);
            assert_eq!(p.beta, 0.0);
        }
        let l = build_ladder(params(0.0, -0.7), 3).unwrap();
        for j in 1..=4 {
            assert!(l.level(j).unwrap().alpha.abs() < 1e-15);
        }
        assert_eq!(l.subset(1).unwrap(), vec![1, 9]);
        assert_eq!(l.subset(3).unwrap(), vec![1, 3, 5, 7, 9]);
    }

    #[test]
    fn ladder_matches_chain_squaring() {
        let l = build_ladder(params(1.0, -0.8), 3).unwrap();
        for j in 1..=3 {
            let upper = l.level(j + 1).unwrap();
            let squared = transition_from_field(&upper).unwrap().squared().unwrap();
            let f = field_from_transition(&squared);
            let p = l.level(j).unwrap();
            assert!((f.alpha - p.alpha).abs() < 1e-9);
            assert!((f.beta - p.beta).abs() < 1e-9);
        }
    }

    #[test]
    fn center_conditional_normalized() {
        let p = params(0.0, 0.0);
        assert!((center_conditional(&p, 0, 1, 1).unwrap() - 0.5).abs() < 1e-15);
        let p = params(1.3, -0.6);
        for l in 0..2 {
            for r in 0..2 {
                let s = center_conditional(&p, l, r, 0).unwrap() + center_conditional(&p, l, r, 1).unwrap();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
        assert!(center_conditional(&p, 2, 0, 0).is_err());
    }

    #[test]
    fn center_conditional_matches_enumeration() {
        let p = params(0.7, -0.4);
        let m = p.chain_model(5).unwrap();
        for t in 2..=4 {
            for l in 0..2 {
                for r in 0..2 {
                    let d = brute_conditional(&m, t, &[(t - 1, l), (t + 1, r)], EnumerationBudget::default())
                        .unwrap();
                    for z in 0..2 {
                        assert!((d[z] - center_conditional(&p, l, r, z).unwrap()).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn joint_matches_transfer() {
        let p = params(1.0, -0.8);
        let m = p.chain_model(5).unwrap();
        let c = normalizing_constant(&m).unwrap();
        let mut total = 0.0;
        for_each_configuration(2, 5, |z| {
            let a = joint_via_dichotomy(p, 2, z).unwrap();
            let b = m.unnormalized_density(z).unwrap().div(c).to_f64();
            assert!((a - b).abs() <= 1e-10 * b);
            total += a;
        });
        assert!((total - 1.0).abs() < 1e-10);
        let u = joint_via_dichotomy(params(0.0, 0.0), 2, &[0, 1, 1, 0, 1]).unwrap();
        assert!((u - 1.0 / 32.0).abs() < 1e-15);
        assert!(joint_via_dichotomy(p, 2, &[0; 4]).is_err());
    }

    #[test]
    fn constant_matches_transfer() {
        let p = params(1.0, -0.8);
        let a = constant_via_dichotomy(p, 3).unwrap();
        let b = normalizing_constant(&p.chain_model(9).unwrap()).unwrap();
        assert!((a.ln() - b.ln()).abs() <= 1e-9 * b.ln().abs());
    }

    #[test]
    fn ladder_csv() {
        let csv = build_ladder(params(1.0, 0.0), 2).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("3,1.0"));
        assert!(lines[3].starts_with("1,"));
    }
}
