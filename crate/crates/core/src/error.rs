use thiserror::Error;

/// Errors raised by the series kernel and the modular-forms pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("incompatible precision windows")]
    IncompatibleWindows,

    #[error("non-invertible series")]
    NonInvertible,

    #[error("coefficient not computed at this precision (exponent {exp}, window [{min}, {cap}))")]
    CoefficientUnavailable { exp: i64, min: i64, cap: i64 },

    #[error("fractional eta quotient unsupported")]
    FractionalEta,

    #[error("cusp space generation failed: achieved rank {achieved}, target {target}")]
    CuspSpaceGeneration { achieved: usize, target: usize },

    #[error("bound hypothesis violated: {0}")]
    BoundHypothesis(String),

    #[error("invalid weight {k}: {reason}")]
    InvalidWeight { k: i64, reason: String },

    #[error("invalid level {p}: {reason}")]
    InvalidLevel { p: u64, reason: String },

    #[error("unsupported level {p}: {reason}")]
    UnsupportedLevel { p: u64, reason: String },

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("missing basis element with index {m}")]
    MissingElement { m: i64 },

    #[error("stabilization failure: {0}")]
    Stabilization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent data: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
