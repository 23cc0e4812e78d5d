use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("covariance has eigenvalue {0:e}, below the clamping threshold -1e-10")]
    NegativeEigenvalue(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector leaves the Cameron-Martin space (off-range component {0:e})")]
    NotInCameronMartin(f64),

    #[error("invalid quadrature specification: {0}")]
    SpecInvalid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field is missing required metadata: {0}")]
    MissingMetadata(&'static str),

    #[error("quadrature tolerance not met: {0}")]
    ToleranceNotMet(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
