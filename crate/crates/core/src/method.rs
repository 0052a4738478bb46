//! Choosing how to evaluate a normalizing constant.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::future::constant_via_future;
use crate::model::{ChainModel, Potentials, SingletonPairModel};
use crate::model_file::ModelDocument;
use crate::oracle::{brute_constant, EnumerationBudget};
use crate::scaled::{constant_via_analytic, constant_via_dense_eig, LogValue, Orientation, ScaledVector};
use crate::spatial::{spatial_chain, spatial_constant_directed, SweepDirection, DEFAULT_COLUMN_CAP, DEFAULT_DENSE_CAP};
use crate::transfer::{lift_r_range, Evaluation, Steps, TransferChain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstantMethod {
    /// Squaring or sweeping, whichever is cheaper for the chain.
    Auto,
    Power,
    Sweep,
    /// Closed form of the binary chain `α z + β z z'`.
    Eig2x2,
    /// Dense symmetric eigendecomposition of a homogeneous transfer matrix.
    Eig,
    /// Future-conditional recursion.
    Future,
    /// Exhaustive summation.
    Oracle,
}

impl ConstantMethod {
    pub const ALL: [ConstantMethod; 7] = [
        ConstantMethod::Auto,
        ConstantMethod::Power,
        ConstantMethod::Sweep,
        ConstantMethod::Eig2x2,
        ConstantMethod::Eig,
        ConstantMethod::Future,
        ConstantMethod::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstantMethod::Auto => "auto",
            ConstantMethod::Power => "power",
            ConstantMethod::Sweep => "sweep",
            ConstantMethod::Eig2x2 => "eig2x2",
            ConstantMethod::Eig => "eig",
            ConstantMethod::Future => "future",
            ConstantMethod::Oracle => "oracle",
        }
    }
}

impl fmt::Display for ConstantMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstantMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConstantMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

/// Size limits shared by every method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub budget: EnumerationBudget,
    /// Cap on dense transfer-matrix entries (lifted and lattice chains).
    pub dense_cap: usize,
    /// Cap on the number of column states of a lattice sweep.
    pub column_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            budget: EnumerationBudget::default(),
            dense_cap: DEFAULT_DENSE_CAP,
            column_cap: DEFAULT_COLUMN_CAP,
        }
    }
}

/// A computed constant and the method that produced it (`auto` resolved).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantReport {
    pub value: LogValue,
    pub method: ConstantMethod,
}

fn inapplicable(method: ConstantMethod, reason: &str) -> Error {
    Error::Inapplicable {
        method: method.name(),
        reason: reason.to_string(),
    }
}

/// `(α, β)` when the chain is the homogeneous binary chain
/// `h(u, v) = α u + β u v` with `α v` added on the last step.
pub fn binary_chain_parameters(chain: &ChainModel) -> Option<(f64, f64)> {
    let Potentials::Homogeneous { body, last } = chain.potentials() else {
        return None;
    };
    if chain.n_states() != 2 {
        return None;
    }
    let alpha = body.get(1, 0);
    let beta = body.get(1, 1) - alpha;
    let tol = 1e-12 * (1.0 + alpha.abs() + beta.abs());
    let expect_body = [0.0, 0.0, alpha, alpha + beta];
    let expect_last = [0.0, alpha, alpha, 2.0 * alpha + beta];
    let same = |t: &[f64], e: &[f64; 4]| t.iter().zip(e).all(|(a, b)| (a - b).abs() <= tol);
    let last = last.as_ref()?;
    (same(body.values(), &expect_body) && same(last.values(), &expect_last)).then_some((alpha, beta))
}

/// `1ᵀ Hᵏ w` of a uniform chain through the dense eigensolver.
pub fn constant_via_eig(chain: &TransferChain) -> Result<LogValue> {
    let Steps::Uniform { body, count, last } = chain.steps() else {
        return Err(inapplicable(ConstantMethod::Eig, "chain is not time invariant"));
    };
    let n = chain.n_states();
    let h: Vec<f64> = (0..n * n).map(|i| body.ln_at(i / n, i % n)).collect();
    if h.iter().any(|x| !x.is_finite()) {
        return Err(inapplicable(ConstantMethod::Eig, "transfer matrix has zero entries"));
    }
    let ones = ScaledVector::ones(n, Orientation::Column);
    let (k, w) = match last {
        Some(l) => (count - 1, l.mul_vector(&ones)?),
        None => (*count, ones),
    };
    constant_via_dense_eig(&h, n, k as u64, &w)
}

/// Evaluates a transfer chain with a chain-level method.
pub fn chain_constant(chain: &TransferChain, method: ConstantMethod) -> Result<ConstantReport> {
    let (value, used) = match method {
        ConstantMethod::Auto => match chain.preferred_evaluation() {
            Evaluation::Power => (chain.constant_power()?, ConstantMethod::Power),
            Evaluation::Sweep => (chain.constant_sweep()?, ConstantMethod::Sweep),
        },
        ConstantMethod::Power => (chain.constant_power()?, method),
        ConstantMethod::Sweep => (chain.constant_sweep()?, method),
        ConstantMethod::Eig => (constant_via_eig(chain)?, method),
        _ => return Err(inapplicable(method, "needs the model, not only its transfer matrices")),
    };
    Ok(ConstantReport { value, method: used })
}

fn future_model(doc: &ModelDocument) -> Result<SingletonPairModel> {
    match doc {
        ModelDocument::Chain(m) => Ok(SingletonPairModel::from_chain(m)),
        ModelDocument::SingletonPair(m) => Ok(m.clone()),
        _ => Err(inapplicable(
            ConstantMethod::Future,
            "requires a chain or singleton/pair model",
        )),
    }
}

/// Normalizing constant of any model document.
pub fn compute_constant(doc: &ModelDocument, method: ConstantMethod, limits: Limits) -> Result<ConstantReport> {
    let report = |value| Ok(ConstantReport { value, method });
    match method {
        ConstantMethod::Oracle => {
            let value = match doc {
                ModelDocument::Chain(m) => brute_constant(m, limits.budget)?,
                ModelDocument::SingletonPair(m) => brute_constant(m, limits.budget)?,
                ModelDocument::RRange(m) => brute_constant(m, limits.budget)?,
                ModelDocument::SpatialIsing(m) => brute_constant(m, limits.budget)?,
            };
            report(value)
        }
        ConstantMethod::Future => report(constant_via_future(&future_model(doc)?)?),
        ConstantMethod::Eig2x2 => {
            let chain = match doc {
                ModelDocument::Chain(_) | ModelDocument::SingletonPair(_) => doc.to_chain()?,
                _ => return Err(inapplicable(method, "requires the binary chain α z + β z z'")),
            };
            let (alpha, beta) = binary_chain_parameters(&chain)
                .ok_or_else(|| inapplicable(method, "model is not the homogeneous binary chain α z + β z z'"))?;
            report(constant_via_analytic(alpha, beta, chain.length())?)
        }
        _ => match doc {
            ModelDocument::Chain(_) | ModelDocument::SingletonPair(_) => {
                chain_constant(&TransferChain::from_model(&doc.to_chain()?), method)
            }
            ModelDocument::RRange(m) => chain_constant(lift_r_range(m, limits.dense_cap)?.chain(), method),
            ModelDocument::SpatialIsing(m) => match method {
                ConstantMethod::Auto | ConstantMethod::Sweep => {
                    let value = spatial_constant_directed(m, SweepDirection::LeftToRight, limits.column_cap)?;
                    Ok(ConstantReport {
                        value,
                        method: ConstantMethod::Sweep,
                    })
                }
                _ => chain_constant(&spatial_chain(m, limits.dense_cap)?, method),
            },
        },
    }
}
