//! Crate-wide error type and result alias.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the signal, estimation, transform, dataset, and
/// training paths.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Energy detection found no burst in a capture.
    #[error("detection failure: {0}")]
    DetectionFailure(String),

    /// An input is unusable rather than malformed (e.g. a near-zero channel
    /// estimate that cannot be divided safely).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An on-disk artifact does not match the expected layout.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}
