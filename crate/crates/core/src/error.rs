//! Crate error type.

use thiserror::Error;

/// Errors surfaced by the modeling and optimization APIs.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid surface or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Invalid argument to an operation (dimension mismatch, bad range, ...).
    #[error("argument error: {0}")]
    Argument(String),
    /// The constraint set admits no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
