//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A run was assembled from incompatible pieces (grid too small for
    /// dealiasing, mismatched mode counts, incompatible study levels, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A config document violated a declared rule.
    #[error("validation error: {0}")]
    Validation(String),

    /// A snapshot file could not be decoded (bad magic, version, digest,
    /// truncated payload).
    #[error("snapshot format error: {0}")]
    Format(String),

    /// The time stepper produced non-finite values.
    #[error("integration error: {0}")]
    Integration(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
