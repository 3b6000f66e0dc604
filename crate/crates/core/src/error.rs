use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration over 2^{bits} driver patterns refused (limit 2^{limit})")]
    EnumerationTooLarge { bits: usize, limit: usize },

    #[error(
        "no start reached residual <= {tol:e} at window {window} (best residual {best_residual:e})"
    )]
    InfeasibleAtWindow {
        window: usize,
        tol: f64,
        best_residual: f64,
    },

    #[error("1D profile is not of g^(alpha) form: {0}")]
    ProfileNotRadial(String),

    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
