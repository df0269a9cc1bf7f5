use thiserror::Error;

/// Errors raised by the library. Matrix indices in error payloads are 0-based.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {0} of A is all zero")]
    ZeroColumnInA(usize),

    #[error("row {0} of B is all zero")]
    ZeroRowInB(usize),

    #[error("rows {0} and {1} of B are identical")]
    DuplicateBRows(usize, usize),

    #[error("non-finite entry in {0}")]
    NonFiniteEntry(String),

    #[error("exponent {exponent:e} at index {index} exceeds the overflow guard")]
    OverflowGuard { index: usize, exponent: f64 },

    #[error("state coordinate {0} became non-finite")]
    NonFiniteState(usize),

    #[error("step {t} failed: {source}")]
    StepFailed { t: usize, source: Box<QpError> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("QMT matrix is singular")]
    SingularC,

    #[error("QMT matrix is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("wrong dimension: expected n = {expected}, got n = {got}")]
    WrongDimension { expected: usize, got: usize },

    #[error("symplectic check needs an even dimension, got n = {0}")]
    OddDimension(usize),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("column {0} of A does not sum to zero; the n = 3 determinant expansion needs it")]
    ConditionTwoViolated(usize),

    #[error("map is not a conservative two-dimensional map")]
    NotConservative2D,

    #[error("reduction preconditions not met: {0}")]
    ConditionsNotMet(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = QpError> = std::result::Result<T, E>;
