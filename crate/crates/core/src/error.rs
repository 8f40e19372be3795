use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates one of the documented invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Exact enumeration over `3^(N-1)` report vectors was requested for a
    /// population that is too large.
    #[error("exact enumeration needs population <= {limit}, got {population}")]
    EnumerationTooLarge { population: usize, limit: usize },

    /// A report vector or profile does not match the mechanism's population.
    #[error("expected {expected} individuals, got {actual}")]
    PopulationMismatch { expected: usize, actual: usize },

    /// The ratio `D(eps) / V_LB(eps)` has no interior maximizer on the bracket.
    #[error("no unique maximizer: {0}")]
    NoUniqueMaximizer(String),

    /// A profile strategy is neither an eps-strategy nor non-informative.
    #[error("strategy of individual {0} is neither symmetric randomized response nor non-informative")]
    NotEpsilonProfile(usize),

    /// An internal consistency check failed.
    #[error("internal assertion failed: {0}")]
    Assertion(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
