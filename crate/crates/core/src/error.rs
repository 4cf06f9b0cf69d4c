use thiserror::Error;

/// Errors raised by the library.
///
/// Mathematical "no" answers (a family that is not a K-fusion frame, a
/// candidate that is not a dual) are reported through certificates, not
/// through this type. `Hypothesis` is reserved for operations whose
/// precondition is itself a mathematical property that failed to hold.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("{what} did not converge")]
    NoConvergence { what: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid tolerance profile: {0}")]
    InvalidTolerance(String),

    #[error("member {index}: weight {weight} is not a positive finite number")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("operator K is numerically zero")]
    ZeroOperator,

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("hypothesis does not hold: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
