use thiserror::Error;

/// Errors raised by the linear-algebra, state and channel layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("size overflow: {0}")]
    Size(String),
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Kraus operators are not trace preserving (max deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid Choi matrix: {0}")]
    InvalidChoi(String),
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("precondition violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
