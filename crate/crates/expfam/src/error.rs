//! Error type shared by every module in the crate.
//!
//! Domain violations are reported eagerly at operation boundaries instead of
//! letting NaNs propagate through the estimators; the variants distinguish
//! bad parameters, bad observations, and genuine numerical failures so
//! callers can react differently to each.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter left the open domain it must live in.
    #[error("{family}: {message}")]
    Domain {
        family: &'static str,
        message: String,
    },

    /// An observation violates the family's support.
    #[error("invalid example: {0}")]
    Example(String),

    /// A vector or matrix has the wrong length for the configured dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An operation was called outside its documented preconditions.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested quantity has no defined value for these inputs.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// An iteration failed to converge or produced an inconsistent value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A config or data file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
