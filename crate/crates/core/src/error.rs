//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias for fallible operations in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the detection and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument was structurally invalid (shape, sign, or range).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two operands had incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An underlying I/O operation failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized record could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}
