//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("operator not nonnegative: eigenvalue {lambda:.6e} below -ktol = {neg_ktol:.6e}")]
    NotNonNegative { lambda: f64, neg_ktol: f64 },

    #[error("function undefined at eigenvalue {lambda:.6e}")]
    UndefinedAtEigenvalue { lambda: f64 },

    #[error("constraint violated: {name} residual {residual:.6e} exceeds tolerance {tol:.6e}")]
    ConstraintViolated {
        name: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("singular solve: {0}")]
    SingularSolve(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("cache fingerprint mismatch: expected {expected}, found {found}")]
    CacheFingerprint { expected: String, found: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
