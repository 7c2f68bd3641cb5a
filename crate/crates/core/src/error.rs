use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlatError {
    #[error("unknown catalog objective `{0}`")]
    UnknownObjective(String),

    #[error("objective `{name}`: {reason}")]
    BadParams { name: String, reason: String },

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("generators are linearly dependent (detected rank {rank} of {count})")]
    RankDeficient { rank: usize, count: usize },

    #[error("matrix is singular or ill-conditioned (condition estimate {0:e})")]
    Singular(f64),

    #[error("closed form unavailable: {0}")]
    ClosedFormUnavailable(String),

    #[error("point is not a global minimum (residual {0:e})")]
    NotGlobalMinimum(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("function is constant near the base point")]
    LocallyConstant,

    #[error("non-finite value encountered at step {step}")]
    NonFinite { step: usize },

    #[error("no gradient oracle for `{0}`")]
    MissingGradient(String),
}

pub type Result<T> = std::result::Result<T, FlatError>;
