//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TsonnError {
    #[error("invalid network shape: {0}")]
    InvalidShape(String),

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("instability detected: {0}")]
    Instability(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("reference field error: {0}")]
    Reference(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, TsonnError>;
