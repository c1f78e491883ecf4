//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed input files or unusable file formats.
    #[error("parse: {0}")]
    Parse(String),

    /// Arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrices or tables whose shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Numerical failures: singular matrices, loss of positive
    /// definiteness, non-finite values.
    #[error("numerical: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the CLI: 1 for configuration/input problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}
