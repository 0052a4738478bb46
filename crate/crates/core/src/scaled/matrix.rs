use crate::error::{Error, Result};
use crate::parallel;

use super::LogValue;

/// Columns handled per task in vector-matrix products.
const COLUMN_BLOCK: usize = 64;

/// A nonnegative matrix stored as `exp(log_scale) * mantissa`.
///
/// After every constructor and operation the largest mantissa entry is
/// exactly `1.0`, unless the matrix is identically zero, in which case the
/// mantissa is all zeros and `log_scale` is `0.0` and carries no meaning.
/// Rows index the current state, columns the next one.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledNonNegMatrix {
    rows: usize,
    cols: usize,
    mantissa: Vec<f64>,
    log_scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Row,
    Column,
}

/// A nonnegative vector stored as `exp(log_scale) * mantissa`, with the same
/// normalization rule as [`ScaledNonNegMatrix`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledVector {
    mantissa: Vec<f64>,
    log_scale: f64,
    orientation: Orientation,
}

fn normalize(values: &mut [f64], log_scale: f64) -> f64 {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if max != 1.0 {
        let inv = 1.0 / max;
        values.iter_mut().for_each(|x| *x *= inv);
    }
    log_scale + max.ln()
}

impl ScaledNonNegMatrix {
    /// Entrywise exponential of a row-major log table. `-inf` entries become
    /// exact zeros; NaN or `+inf` entries are rejected.
    pub fn from_log_table(rows: usize, cols: usize, h: &[f64]) -> Result<Self> {
        if h.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "log table has {} entries, expected {rows}x{cols}",
                h.len()
            )));
        }
        if h.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::NonFinite("log table".into()));
        }
        let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Ok(Self::zeros(rows, cols));
        }
        let mantissa = h.iter().map(|&x| (x - max).exp()).collect();
        Ok(ScaledNonNegMatrix {
            rows,
            cols,
            mantissa,
            log_scale: max,
        })
    }

    /// Wraps `exp(log_scale) * values`; `values` must be nonnegative.
    pub fn from_parts(rows: usize, cols: usize, mut values: Vec<f64>, log_scale: f64) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if values.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidArgument(
                "matrix values must be finite and nonnegative".into(),
            ));
        }
        let log_scale = normalize(&mut values, log_scale);
        Ok(ScaledNonNegMatrix {
            rows,
            cols,
            mantissa: values,
            log_scale,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut mantissa = vec![0.0; n * n];
        for i in 0..n {
            mantissa[i * n + i] = 1.0;
        }
        ScaledNonNegMatrix {
            rows: n,
            cols: n,
            mantissa,
            log_scale: 0.0,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ScaledNonNegMatrix {
            rows,
            cols,
            mantissa: vec![0.0; rows * cols],
            log_scale: 0.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mantissa(&self) -> &[f64] {
        &self.mantissa
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.iter().all(|&x| x == 0.0)
    }

    #[inline]
    pub fn mantissa_at(&self, u: usize, v: usize) -> f64 {
        self.mantissa[u * self.cols + v]
    }

    /// Natural log of the represented entry (`-inf` for zero).
    #[inline]
    pub fn ln_at(&self, u: usize, v: usize) -> f64 {
        let m = self.mantissa_at(u, v);
        if m == 0.0 {
            f64::NEG_INFINITY
        } else {
            m.ln() + self.log_scale
        }
    }

    pub fn entry(&self, u: usize, v: usize) -> LogValue {
        LogValue::from_ln(self.ln_at(u, v))
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.mantissa[u * self.cols..(u + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut mantissa = vec![0.0; self.rows * self.cols];
        for u in 0..self.rows {
            for v in 0..self.cols {
                mantissa[v * self.rows + u] = self.mantissa[u * self.cols + v];
            }
        }
        ScaledNonNegMatrix {
            rows: self.cols,
            cols: self.rows,
            mantissa,
            log_scale: self.log_scale,
        }
    }

    /// Multiplies column `v` by `weights(v)`, i.e. `self * diag(weights)`.
    pub fn scale_columns(&self, weights: &ScaledVector) -> Result<Self> {
        if weights.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} column weights for {} columns",
                weights.len(),
                self.cols
            )));
        }
        let w = weights.mantissa();
        let values = self
            .mantissa
            .chunks(self.cols)
            .flat_map(|row| row.iter().zip(w).map(|(a, b)| a * b))
            .collect();
        Self::from_parts(self.rows, self.cols, values, self.log_scale + weights.log_scale())
    }

    /// Scaled matrix product; each output entry sums over the inner index in
    /// ascending order.
    pub fn matmul(&self, other: &ScaledNonNegMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, inner, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        parallel::fill_rows(&mut out, m, |i, row| {
            let a_row = &self.mantissa[i * inner..(i + 1) * inner];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.mantissa[k * m..(k + 1) * m];
                for (o, &b) in row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        });
        let log_scale = normalize(&mut out, self.log_scale + other.log_scale);
        Ok(ScaledNonNegMatrix {
            rows: n,
            cols: m,
            mantissa: out,
            log_scale,
        })
    }

    /// `self^k` by repeated squaring. `k = 0` gives the identity.
    pub fn pow(&self, mut k: u64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "power of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut acc: Option<ScaledNonNegMatrix> = None;
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.matmul(&base)?,
                });
            }
            k >>= 1;
            if k > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(acc.unwrap_or_else(|| Self::identity(self.rows)))
    }

    /// Represented matrix as plain doubles divided by `exp(shift)`.
    pub fn to_f64_shifted(&self, shift: f64) -> Vec<f64> {
        let factor = (self.log_scale - shift).exp();
        self.mantissa.iter().map(|x| x * factor).collect()
    }
}

/// `a * b` for scaled matrices.
pub fn scaled_matmul(a: &ScaledNonNegMatrix, b: &ScaledNonNegMatrix) -> Result<ScaledNonNegMatrix> {
    a.matmul(b)
}

/// `a^k` by repeated squaring.
pub fn scaled_matpow(a: &ScaledNonNegMatrix, k: u64) -> Result<ScaledNonNegMatrix> {
    a.pow(k)
}

impl ScaledVector {
    pub fn ones(n: usize, orientation: Orientation) -> Self {
        ScaledVector {
            mantissa: vec![1.0; n],
            log_scale: 0.0,
            orientation,
        }
    }

    /// Indicator of state `i`.
    pub fn basis(n: usize, i: usize, orientation: Orientation) -> Self {
        let mut mantissa = vec![0.0; n];
        mantissa[i] = 1.0;
        ScaledVector {
            mantissa,
            log_scale: 0.0,
            orientation,
        }
    }

    /// `exp(ln_values)` entrywise; `-inf` gives zero.
    pub fn from_ln(ln_values: &[f64], orientation: Orientation) -> Self {
        let max = ln_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return ScaledVector {
                mantissa: vec![0.0; ln_values.len()],
                log_scale: 0.0,
                orientation,
            };
        }
        ScaledVector {
            mantissa: ln_values.iter().map(|&x| (x - max).exp()).collect(),
            log_scale: max,
            orientation,
        }
    }

    /// Wraps `exp(log_scale) * values`; `values` must be nonnegative.
    pub fn from_parts(mut values: Vec<f64>, log_scale: f64, orientation: Orientation) -> Self {
        debug_assert!(values.iter().all(|x| *x >= 0.0));
        let log_scale = normalize(&mut values, log_scale);
        ScaledVector {
            mantissa: values,
            log_scale,
            orientation,
        }
    }

    pub fn len(&self) -> usize {
        self.mantissa.len()
    }

    /// Moves the log scale out of the vector, leaving it at scale zero.
    pub fn take_log_scale(&mut self) -> f64 {
        std::mem::take(&mut self.log_scale)
    }

    pub fn is_empty(&self) -> bool {
        self.mantissa.is_empty()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn mantissa(&self) -> &[f64] {
        &self.mantissa
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn ln_at(&self, i: usize) -> f64 {
        let m = self.mantissa[i];
        if m == 0.0 {
            f64::NEG_INFINITY
        } else {
            m.ln() + self.log_scale
        }
    }

    pub fn entry(&self, i: usize) -> LogValue {
        LogValue::from_ln(self.ln_at(i))
    }

    /// Same values, other orientation.
    pub fn transposed(&self) -> Self {
        ScaledVector {
            orientation: match self.orientation {
                Orientation::Row => Orientation::Column,
                Orientation::Column => Orientation::Row,
            },
            ..self.clone()
        }
    }

    /// Sum of the entries.
    pub fn total(&self) -> LogValue {
        let s: f64 = self.mantissa.iter().sum();
        if s == 0.0 {
            LogValue::ZERO
        } else {
            LogValue::from_ln(s.ln() + self.log_scale)
        }
    }

    /// Row vector times matrix.
    pub fn mul_matrix(&self, m: &ScaledNonNegMatrix) -> Result<ScaledVector> {
        if self.orientation != Orientation::Row {
            return Err(Error::DimensionMismatch(
                "left factor of a vector-matrix product must be a row vector".into(),
            ));
        }
        if self.len() != m.rows() {
            return Err(Error::DimensionMismatch(format!(
                "row vector of length {} times {}x{} matrix",
                self.len(),
                m.rows(),
                m.cols()
            )));
        }
        let cols = m.cols();
        let mut out = vec![0.0; cols];
        parallel::fill_rows(&mut out, COLUMN_BLOCK, |block, chunk| {
            let start = block * COLUMN_BLOCK;
            for (i, &f) in self.mantissa.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                let row = &m.mantissa[i * cols + start..i * cols + start + chunk.len()];
                for (o, &h) in chunk.iter_mut().zip(row) {
                    *o += f * h;
                }
            }
        });
        Ok(ScaledVector::from_parts(
            out,
            self.log_scale + m.log_scale(),
            Orientation::Row,
        ))
    }

    /// `self · other` for a row vector and a column vector.
    pub fn dot(&self, other: &ScaledVector) -> Result<LogValue> {
        if self.orientation != Orientation::Row || other.orientation != Orientation::Column {
            return Err(Error::DimensionMismatch(
                "dot product needs a row vector times a column vector".into(),
            ));
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let s: f64 = self
            .mantissa
            .iter()
            .zip(&other.mantissa)
            .map(|(a, b)| a * b)
            .sum();
        if s == 0.0 {
            return Ok(LogValue::ZERO);
        }
        Ok(LogValue::from_ln(s.ln() + self.log_scale + other.log_scale))
    }
}

impl ScaledNonNegMatrix {
    /// Matrix times column vector.
    pub fn mul_vector(&self, v: &ScaledVector) -> Result<ScaledVector> {
        if v.orientation() != Orientation::Column {
            return Err(Error::DimensionMismatch(
                "right factor of a matrix-vector product must be a column vector".into(),
            ));
        }
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times column vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        parallel::fill_indexed(&mut out, |i| {
            self.row(i)
                .iter()
                .zip(v.mantissa())
                .map(|(a, b)| a * b)
                .sum()
        });
        Ok(ScaledVector::from_parts(
            out,
            self.log_scale + v.log_scale(),
            Orientation::Column,
        ))
    }
}

/// `f · ms[0] · ms[1] ⋯ · b`, evaluated as left-to-right vector sweeps so the
/// full product is never formed.
pub fn quadratic_form<'a, I>(f: &ScaledVector, ms: I, b: &ScaledVector) -> Result<LogValue>
where
    I: IntoIterator<Item = &'a ScaledNonNegMatrix>,
{
    let mut acc = f.clone();
    for m in ms {
        acc = acc.mul_matrix(m)?;
    }
    acc.dot(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c[i * n + j] += a[i * n + k] * b[k * n + j];
                }
            }
        }
        c
    }

    fn assert_rel(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol * b.abs().max(1e-300),
            "{a} vs {b} (tol {tol})"
        );
    }

    #[test]
    fn zero_log_table_gives_ones() {
        let m = ScaledNonNegMatrix::from_log_table(2, 2, &[0.0; 4]).unwrap();
        assert_eq!(m.mantissa(), &[1.0; 4]);
        assert_eq!(m.log_scale(), 0.0);
    }

    #[test]
    fn large_log_table_stays_in_range() {
        let m = ScaledNonNegMatrix::from_log_table(2, 2, &[1000.0, 0.0, 3.0, 999.0]).unwrap();
        assert_eq!(m.log_scale(), 1000.0);
        assert!(m.mantissa().iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!((m.ln_at(1, 1) - 999.0).abs() < 1e-12);
    }

    #[test]
    fn example_one_transfer_matrix() {
        // h(u, v) = u - 0.8 u v on {0, 1}
        let h = [0.0, 0.0, 1.0, 0.2];
        let m = ScaledNonNegMatrix::from_log_table(2, 2, &h).unwrap();
        let dense = m.to_f64_shifted(0.0);
        let expected = [1.0, 1.0, 1f64.exp(), 0.2f64.exp()];
        for (x, y) in dense.iter().zip(expected) {
            assert_rel(*x, y, 1e-15);
        }
    }

    #[test]
    fn non_finite_log_table_rejected() {
        assert!(ScaledNonNegMatrix::from_log_table(1, 2, &[0.0, f64::INFINITY]).is_err());
        assert!(ScaledNonNegMatrix::from_log_table(1, 2, &[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = ScaledNonNegMatrix::from_log_table(3, 3, &h).unwrap();
        let p = a.matmul(&ScaledNonNegMatrix::identity(3)).unwrap();
        assert_eq!(p, a);
    }

    #[test]
    fn matmul_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..9).map(|_| rng.random_range(0.01..1.0)).collect();
        let b: Vec<f64> = (0..9).map(|_| rng.random_range(0.01..1.0)).collect();
        let sa = ScaledNonNegMatrix::from_parts(3, 3, a.clone(), 0.0).unwrap();
        let sb = ScaledNonNegMatrix::from_parts(3, 3, b.clone(), 0.0).unwrap();
        let got = sa.matmul(&sb).unwrap().to_f64_shifted(0.0);
        for (x, y) in got.iter().zip(naive(&a, &b, 3)) {
            assert_rel(*x, y, 1e-14);
        }
    }

    #[test]
    fn scales_add_without_overflow() {
        let a = ScaledNonNegMatrix::from_log_table(2, 2, &[800.0; 4]).unwrap();
        let b = ScaledNonNegMatrix::from_log_table(2, 2, &[900.0; 4]).unwrap();
        let p = a.matmul(&b).unwrap();
        assert!((p.log_scale() - (1700.0 + 2f64.ln())).abs() < 1e-9);
        assert_eq!(p.mantissa(), &[1.0; 4]);
    }

    #[test]
    fn small_powers() {
        let a = ScaledNonNegMatrix::from_log_table(2, 2, &[0.3, -1.0, 0.5, 0.1]).unwrap();
        assert_eq!(a.pow(0).unwrap(), ScaledNonNegMatrix::identity(2));
        assert_eq!(a.pow(1).unwrap(), a);
    }

    #[test]
    fn power_matches_left_fold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = ScaledNonNegMatrix::from_log_table(4, 4, &h).unwrap();
        let mut fold = a.clone();
        for _ in 1..13 {
            fold = fold.matmul(&a).unwrap();
        }
        let pow = a.pow(13).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                let (x, y) = (pow.ln_at(u, v), fold.ln_at(u, v));
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn quadratic_form_small_cases() {
        let ones_r = ScaledVector::ones(2, Orientation::Row);
        let ones_c = ScaledVector::ones(2, Orientation::Column);
        let c = quadratic_form(&ones_r, [], &ones_c).unwrap();
        assert!((c.to_f64() - 2.0).abs() < 1e-15);

        let all_ones = ScaledNonNegMatrix::from_log_table(2, 2, &[0.0; 4]).unwrap();
        let t = 30;
        let ms = vec![all_ones; t - 1];
        let c = quadratic_form(&ones_r, &ms, &ones_c).unwrap();
        assert!((c.ln() - t as f64 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn orientation_is_checked() {
        let col = ScaledVector::ones(2, Orientation::Column);
        let m = ScaledNonNegMatrix::identity(2);
        assert!(col.mul_matrix(&m).is_err());
        assert!(m.mul_vector(&col.transposed()).is_err());
        assert!(col.dot(&col).is_err());
    }

    #[test]
    fn matrix_vector_products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = ScaledNonNegMatrix::from_log_table(3, 4, &h).unwrap();
        let f = ScaledVector::from_ln(&[0.1, -0.4, 2.0], Orientation::Row);
        let b = ScaledVector::from_ln(&[1.0, 0.0, -1.0, 0.5], Orientation::Column);
        let left = f.mul_matrix(&a).unwrap().dot(&b).unwrap();
        let right = f.dot(&a.mul_vector(&b).unwrap()).unwrap();
        assert!((left.ln() - right.ln()).abs() < 1e-13);
    }
}
