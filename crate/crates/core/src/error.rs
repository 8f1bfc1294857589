use thiserror::Error;

/// Errors raised by the estimators, oracles and simulation drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("too few observations: {what} requires {required}, got {got}")]
    TooFewSamples { what: &'static str, required: usize, got: usize },

    #[error("degenerate bandwidth: median pairwise distance is zero")]
    DegenerateBandwidth,

    #[error("degenerate variance estimate ({value}); studentization undefined")]
    DegenerateVariance { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("repeated index {0} in four-tuple")]
    RepeatedIndex(usize),

    #[error("index {index} out of range for sample of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("enumeration of {required} configurations exceeds the limit of {limit}")]
    EnumerationTooLarge { required: u128, limit: u128 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
