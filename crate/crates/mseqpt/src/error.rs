//! Error types shared across the crate.

use thiserror::Error;

/// Convenience result type used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index out of range: {index} (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid design set: {0}")]
    InvalidDesign(String),

    #[error("observable map row {row} failed verification: {detail}")]
    ObservableMap { row: usize, detail: String },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("numerical validation failed: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
