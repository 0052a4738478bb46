use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed model document: {0}")]
    Malformed(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("chain length {0} is too short (need at least 2 sites)")]
    TooShort(usize),

    #[error("configuration has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("state {state} out of range for an alphabet of {n_states} states")]
    StateOutOfRange { state: usize, n_states: usize },

    #[error("site {site} out of range 1..={length}")]
    SiteOutOfRange { site: usize, length: usize },

    #[error("site subset must be non-empty and strictly increasing")]
    InvalidSubset,

    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("enumeration budget exceeded: {needed} configurations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("method `{method}` is not applicable: {reason}")]
    Inapplicable {
        method: &'static str,
        reason: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Whether the error comes from a size cap or enumeration budget rather
    /// than malformed input.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::CapExceeded { .. } | Error::BudgetExceeded { .. })
    }
}
