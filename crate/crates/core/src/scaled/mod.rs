//! Overflow-safe arithmetic: log-domain scalars, scaled nonnegative matrices
//! and vectors, eigenvalue routes and the randomized factorization.

mod log_value;
mod matrix;
pub mod randomized;
pub mod spectral;

pub use log_value::{log_sum_exp, LogSumExp, LogValue, ScaleSum};
pub use matrix::{quadratic_form, scaled_matmul, scaled_matpow, Orientation, ScaledNonNegMatrix, ScaledVector};
pub use randomized::{randomized_factorize, LowRankFactors, RandomizedConfig};
pub use spectral::{analytic_eig_2x2, constant_via_analytic, constant_via_dense_eig, Eig2x2};
