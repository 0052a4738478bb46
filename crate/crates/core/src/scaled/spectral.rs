//! Eigenvalue routes to the constant of a homogeneous chain.
//!
//! Two routes live here. The closed form for the binary `{0, 1}` chain with
//! singleton `α z` and pair `β z z'` uses the eigenvalues of its 2×2 transfer
//! matrix directly. The dense route handles any homogeneous body table whose
//! transfer matrix is diagonally similar to a symmetric matrix and hands the
//! symmetric eigenproblem to nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::{LogValue, Orientation, ScaledVector};

/// Eigenvalues of `[[1, 1], [e^α, e^{α+β}]]` with `λ₁ ≤ λ₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eig2x2 {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Discriminant `(1 − e^{α+β})² + 4e^α`.
    pub delta: f64,
}

pub fn analytic_eig_2x2(alpha: f64, beta: f64) -> Eig2x2 {
    let eab = (alpha + beta).exp();
    let ea = alpha.exp();
    let delta = (1.0 - eab).powi(2) + 4.0 * ea;
    let lambda2 = (1.0 + eab + delta.sqrt()) / 2.0;
    // product form avoids cancellation in (1 + e^{α+β} − √Δ)
    let lambda1 = (eab - ea) / lambda2;
    Eig2x2 {
        lambda1,
        lambda2,
        delta,
    }
}

/// Closed-form constant of the binary chain `θ(z) = α z`, `Ψ(z, z') = β z z'`
/// on `{0, 1}` with `length` sites, every singleton counted once.
///
/// `C = [(λ₁^{T−1}(λ₂−1) + λ₂^{T−1}(1−λ₁))(1+e^α) + e^α(1+e^{α+β})(λ₂^{T−1} − λ₁^{T−1})] / √Δ`,
/// evaluated with `λ₂^{T−1}` factored out so that large `T` stays finite.
pub fn constant_via_analytic(alpha: f64, beta: f64, length: usize) -> Result<LogValue> {
    if length < 2 {
        return Err(Error::TooShort(length));
    }
    let Eig2x2 {
        lambda1,
        lambda2,
        delta,
    } = analytic_eig_2x2(alpha, beta);
    let k = (length - 1) as i32;
    let rho_k = if length - 1 > i32::MAX as usize {
        0.0
    } else {
        (lambda1 / lambda2).powi(k)
    };
    let ea = alpha.exp();
    let eab = (alpha + beta).exp();
    let bracket = (rho_k * (lambda2 - 1.0) + (1.0 - lambda1)) * (1.0 + ea)
        + ea * (1.0 + eab) * (1.0 - rho_k);
    if !(bracket > 0.0) {
        return Err(Error::Numerical(format!(
            "closed form bracket is {bracket} for alpha={alpha}, beta={beta}"
        )));
    }
    let ln = (length - 1) as f64 * lambda2.ln() + bracket.ln() - 0.5 * delta.ln();
    Ok(LogValue::from_ln(ln))
}

/// Potential `g` with `h(u,v) − h(v,u) = g(u) − g(v)`, if one exists.
fn antisymmetric_potential(h: &[f64], n: usize) -> Option<Vec<f64>> {
    let g: Vec<f64> = (0..n).map(|u| h[u * n] - h[u]).collect();
    let scale = h.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    for u in 0..n {
        for v in 0..n {
            let lhs = h[u * n + v] - h[v * n + u];
            if (lhs - (g[u] - g[v])).abs() > 1e-9 * scale {
                return None;
            }
        }
    }
    Some(g)
}

/// `1ᵀ H^k w` where `H = exp(h)` is diagonally similar to a symmetric matrix.
///
/// With `h(u,v) − h(v,u) = g(u) − g(v)`, `H = E^{1/2} S E^{−1/2}` for
/// `E = diag(e^g)` and symmetric `S`; `S = V Λ Vᵀ` comes from the symmetric
/// eigensolver and the constant is the signed sum `Σ λᵢ^k (1ᵀE^{1/2}vᵢ)(vᵢᵀE^{−1/2}w)`.
pub fn constant_via_dense_eig(h: &[f64], n: usize, k: u64, w: &ScaledVector) -> Result<LogValue> {
    if h.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {n}x{n} table",
            h.len()
        )));
    }
    if w.len() != n || w.orientation() != Orientation::Column {
        return Err(Error::DimensionMismatch(
            "right vector must be a column of matching length".into(),
        ));
    }
    let g = antisymmetric_potential(h, n).ok_or_else(|| Error::Inapplicable {
        method: "eig",
        reason: "transfer matrix is not diagonally similar to a symmetric matrix".into(),
    })?;

    let mut s = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            let a = h[u * n + v] - 0.5 * g[u] + 0.5 * g[v];
            let b = h[v * n + u] - 0.5 * g[v] + 0.5 * g[u];
            s[u * n + v] = 0.5 * (a + b);
        }
    }
    let s_max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sym = DMatrix::from_fn(n, n, |u, v| (s[u * n + v] - s_max).exp());
    let eig = SymmetricEigen::new(sym);

    let half: Vec<f64> = g.iter().map(|x| 0.5 * x).collect();
    let x_shift = half.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x: Vec<f64> = half.iter().map(|a| (a - x_shift).exp()).collect();
    let ln_y: Vec<f64> = (0..n).map(|v| w.ln_at(v) - half[v]).collect();
    let y_shift = ln_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if y_shift == f64::NEG_INFINITY {
        return Ok(LogValue::ZERO);
    }
    let y: Vec<f64> = ln_y.iter().map(|a| (a - y_shift).exp()).collect();

    let kf = k as f64;
    let odd = k % 2 == 1;
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(n);
    for i in 0..n {
        let mu = eig.eigenvalues[i];
        let vec = eig.eigenvectors.column(i);
        let left: f64 = x.iter().zip(vec.iter()).map(|(a, b)| a * b).sum();
        let right: f64 = y.iter().zip(vec.iter()).map(|(a, b)| a * b).sum();
        let a = left * right;
        if a == 0.0 || (mu == 0.0 && k > 0) {
            continue;
        }
        let ln_mag = if k == 0 { 0.0 } else { kf * mu.abs().ln() } + a.abs().ln();
        let sign_mu = if odd && mu < 0.0 { -1.0 } else { 1.0 };
        terms.push((ln_mag, sign_mu * a.signum()));
    }
    let top = terms
        .iter()
        .map(|t| t.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|(l, sgn)| sgn * (l - top).exp()).sum();
    if !(sum > 0.0) {
        return Err(Error::Numerical(format!(
            "spectral sum is {sum}; eigen-decomposition lost the positive part"
        )));
    }
    Ok(LogValue::from_ln(
        top + sum.ln() + kf * s_max + x_shift + y_shift,
    ))
}
