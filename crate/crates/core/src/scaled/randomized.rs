//! Randomized low-rank factorization `H ≈ P D Qᵀ`.
//!
//! 1. a Gaussian sketch `Y = H Ω` (optionally refined by power iterations)
//!    is orthonormalized into `O`, so that `O Oᵀ H ≈ H`;
//! 2. `B = Oᵀ H` is formed;
//! 3. the small matrix is factored as `B = R D Qᵀ`;
//! 4. `P = O R` inherits orthonormal columns.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::{LogValue, Orientation, ScaledNonNegMatrix, ScaledVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomizedConfig {
    pub rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl RandomizedConfig {
    pub fn new(rank: usize, oversampling: usize) -> Self {
        RandomizedConfig {
            rank,
            oversampling,
            power_iterations: 1,
            seed: 0x5eed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_power_iterations(mut self, q: usize) -> Self {
        self.power_iterations = q;
        self
    }
}

/// `exp(log_scale) · P · diag(d) · Qᵀ`.
#[derive(Clone, Debug)]
pub struct LowRankFactors {
    /// rows × k', orthonormal columns.
    pub p: DMatrix<f64>,
    /// k' nonnegative values, nonincreasing.
    pub d: Vec<f64>,
    /// cols × k', orthonormal columns.
    pub q: DMatrix<f64>,
    pub log_scale: f64,
}

fn mantissa_matrix(h: &ScaledNonNegMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(h.rows(), h.cols(), h.mantissa())
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

pub fn randomized_factorize(h: &ScaledNonNegMatrix, config: RandomizedConfig) -> Result<LowRankFactors> {
    let (rows, cols) = h.shape();
    let full = rows.min(cols);
    if config.rank == 0 || config.rank > full {
        return Err(Error::InvalidArgument(format!(
            "rank {} must be in 1..={full}",
            config.rank
        )));
    }
    // oversampling beyond the full rank adds nothing
    let l = (config.rank + config.oversampling).min(full);
    let a = mantissa_matrix(h);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega = DMatrix::from_fn(cols, l, |_, _| StandardNormal.sample(&mut rng));

    let mut o = orthonormalize(&a * omega);
    for _ in 0..config.power_iterations {
        let z = orthonormalize(a.tr_mul(&o));
        o = orthonormalize(&a * z);
    }

    let b = o.tr_mul(&a);
    let svd = b.svd(true, true);
    let r = svd.u.ok_or_else(|| Error::Numerical("SVD produced no left factor".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD produced no right factor".into()))?;
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let top = sigma[order[0]];
    let cutoff = top * f64::EPSILON * rows.max(cols) as f64;
    let keep: Vec<usize> = order
        .into_iter()
        .take(config.rank)
        .take_while(|&i| sigma[i] > cutoff)
        .collect();
    let k = keep.len().max(1);
    let keep = if keep.is_empty() { vec![0] } else { keep };

    let r_k = DMatrix::from_fn(r.nrows(), k, |i, j| r[(i, keep[j])]);
    let p = &o * r_k;
    let q = DMatrix::from_fn(cols, k, |i, j| v_t[(keep[j], i)]);
    let d = keep.iter().map(|&i| sigma[i]).collect();
    Ok(LowRankFactors {
        p,
        d,
        q,
        log_scale: h.log_scale(),
    })
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.d.len()
    }

    /// `P D Qᵀ` divided by `exp(log_scale)`.
    pub fn reconstruct_mantissa(&self) -> DMatrix<f64> {
        let mut pd = self.p.clone();
        for (j, &s) in self.d.iter().enumerate() {
            pd.column_mut(j).scale_mut(s);
        }
        pd * self.q.transpose()
    }

    /// `‖H − P D Qᵀ‖_F / ‖H‖_F`.
    pub fn relative_frobenius_error(&self, h: &ScaledNonNegMatrix) -> f64 {
        let a = mantissa_matrix(h);
        let shift = (self.log_scale - h.log_scale()).exp();
        let approx = self.reconstruct_mantissa() * shift;
        let norm = a.norm();
        if norm == 0.0 {
            return approx.norm();
        }
        (a - approx).norm() / norm
    }

    /// Largest entry of `|PᵀP − I|` and `|QᵀQ − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.rank();
        let eye = DMatrix::<f64>::identity(k, k);
        let dp = (self.p.tr_mul(&self.p) - &eye).amax();
        let dq = (self.q.tr_mul(&self.q) - &eye).amax();
        dp.max(dq)
    }

    /// `f · H̃^n · b` with `H̃ = P D Qᵀ`, computed through the k × k core
    /// `H̃^n = P D (Qᵀ P D)^{n−1} Qᵀ` with signed scaling.
    pub fn power_form(&self, n: u64, f: &ScaledVector, b: &ScaledVector) -> Result<LogValue> {
        if f.orientation() != Orientation::Row || b.orientation() != Orientation::Column {
            return Err(Error::DimensionMismatch("need a row and a column vector".into()));
        }
        if f.len() != self.p.nrows() || b.len() != self.q.nrows() {
            return Err(Error::DimensionMismatch("vector lengths do not match factors".into()));
        }
        if n == 0 {
            return f.dot(b);
        }
        let k = self.rank();
        let dv = DVector::from_vec(self.d.clone());
        let fv = DVector::from_row_slice(f.mantissa());
        let bv = DVector::from_row_slice(b.mantissa());
        // left = fᵀ P D, right = Qᵀ b, core = Qᵀ P D
        let left = (self.p.tr_mul(&fv)).component_mul(&dv);
        let right = self.q.tr_mul(&bv);
        let mut pd = self.p.clone();
        for j in 0..k {
            pd.column_mut(j).scale_mut(self.d[j]);
        }
        let core = self.q.tr_mul(&pd);
        let (core_pow, core_scale) = signed_pow(&core, n - 1);
        let value = left.dot(&(core_pow * right));
        if !(value > 0.0) {
            return Err(Error::Numerical(format!(
                "low-rank power form is {value}; increase the rank"
            )));
        }
        Ok(LogValue::from_ln(
            value.ln() + core_scale + n as f64 * self.log_scale + f.log_scale() + b.log_scale(),
        ))
    }
}

/// `m^k` as `(mantissa, ln scale)` with the mantissa renormalized by its
/// largest absolute entry after every product.
fn signed_pow(m: &DMatrix<f64>, mut k: u64) -> (DMatrix<f64>, f64) {
    fn renorm(x: DMatrix<f64>, scale: f64) -> (DMatrix<f64>, f64) {
        let top = x.amax();
        if top == 0.0 {
            (x, scale)
        } else {
            (x / top, scale + top.ln())
        }
    }
    let n = m.nrows();
    let mut acc = (DMatrix::<f64>::identity(n, n), 0.0);
    let mut base = renorm(m.clone(), 0.0);
    while k > 0 {
        if k & 1 == 1 {
            acc = renorm(&acc.0 * &base.0, acc.1 + base.1);
        }
        k >>= 1;
        if k > 0 {
            base = renorm(&base.0 * &base.0, 2.0 * base.1);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_dense(m: &DMatrix<f64>) -> ScaledNonNegMatrix {
        let values: Vec<f64> = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        ScaledNonNegMatrix::from_parts(m.nrows(), m.ncols(), values, 0.0).unwrap()
    }

    #[test]
    fn rank_one_is_exact() {
        let u = DVector::from_fn(20, |i, _| 1.0 + i as f64 * 0.1);
        let v = DVector::from_fn(15, |i, _| 0.5 + (i as f64).sin().abs());
        let h = from_dense(&(&u * v.transpose()));
        let f = randomized_factorize(&h, RandomizedConfig::new(1, 2)).unwrap();
        assert!(f.relative_frobenius_error(&h) < 1e-12);
        assert!(f.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn identity_full_rank() {
        let h = ScaledNonNegMatrix::identity(4);
        let f = randomized_factorize(&h, RandomizedConfig::new(4, 0)).unwrap();
        let r = f.reconstruct_mantissa();
        assert!((r - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
    }

    #[test]
    fn rank_parameters_checked() {
        let h = ScaledNonNegMatrix::identity(4);
        assert!(randomized_factorize(&h, RandomizedConfig::new(5, 0)).is_err());
        assert!(randomized_factorize(&h, RandomizedConfig::new(0, 1)).is_err());
        // oversampling is clipped to the matrix size
        assert_eq!(randomized_factorize(&h, RandomizedConfig::new(3, 10)).unwrap().rank(), 3);
    }

    #[test]
    fn power_form_matches_dense_power_at_full_rank() {
        let h = ScaledNonNegMatrix::from_log_table(
            3,
            3,
            &[0.1, 0.5, -0.2, 0.3, 0.0, 0.9, -0.4, 0.2, 0.6],
        )
        .unwrap();
        let f = randomized_factorize(&h, RandomizedConfig::new(3, 0)).unwrap();
        let ones_r = ScaledVector::ones(3, Orientation::Row);
        let ones_c = ScaledVector::ones(3, Orientation::Column);
        let approx = f.power_form(9, &ones_r, &ones_c).unwrap();
        let exact = ones_r
            .mul_matrix(&h.pow(9).unwrap())
            .unwrap()
            .dot(&ones_c)
            .unwrap();
        assert!((approx.ln() - exact.ln()).abs() < 1e-10);
    }
}
