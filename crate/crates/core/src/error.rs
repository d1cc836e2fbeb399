//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid geometry, resolution, or parameter combination.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Data that makes a requested quantity meaningless (e.g. an observed
    /// trace with zero energy under a normalized misfit).
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// Caller broke an API contract (mismatched sampling, bad index).
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
