//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the toolkit, grouped so the CLI can map them to exit codes.
#[derive(Debug, Error)]
pub enum RnlsError {
    /// Invalid or inconsistent user configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A precondition of a numerical routine was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The computation itself failed (NaN, divergence, bound violation, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// A checkpoint file is malformed.
    #[error("corrupted checkpoint: {0}")]
    Checkpoint(String),
}

impl RnlsError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RnlsError::Config(_) | RnlsError::InvalidInput(_) => 2,
            RnlsError::Numerical(_) => 3,
            RnlsError::Io(_) | RnlsError::Checkpoint(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, RnlsError>;
