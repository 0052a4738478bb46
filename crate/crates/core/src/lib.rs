//! Exact normalizing constants and marginals of chain-structured Gibbs
//! distributions.
//!
//! A distribution `π(z) ∝ exp Σ_s h_s(z_s, z_{s+1})` on `E^T` is handled
//! through its transfer matrices `H_s = exp h_s`: the constant is
//! `1ᵀ H_1 ⋯ H_{T−1} 1` and every marginal is a contraction of the same
//! products. All products run in scaled arithmetic ([`scaled`]) so chains of
//! a million sites or lattices of thousands of spins never overflow.
//!
//! Beyond the basic recursions ([`transfer`]) the crate provides the
//! future-conditional recursion ([`future`]), dichotomous thinning of the
//! binary Ising chain ([`dichotomous`]), lattice fields lifted to chains of
//! columns ([`spatial`]) and a brute-force enumeration oracle ([`oracle`]).
//!
//! Sites are numbered `1..=T`; states are the integers `0..N`.

pub mod bench;
pub mod dichotomous;
pub mod error;
pub mod future;
pub mod method;
pub mod model;
pub mod model_file;
pub mod oracle;
pub mod parallel;
pub mod scaled;
pub mod spatial;
pub mod transfer;

pub use error::{Error, Result};
pub use model::{ChainModel, EnergyModel, LogTable, RRangeModel, SingletonPairModel};
pub use scaled::{LogValue, ScaledNonNegMatrix, ScaledVector};
pub use transfer::{MarginalTable, TransferChain};
