//! Crate error type and process exit-code mapping.

use thiserror::Error;

/// Errors surfaced by simulator operations and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or malformed input file.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid argument to an operation (bad dimensions, empty input, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Artifact incompatibility (pool hash mismatch, wrong format version).
    #[error("incompatible artifact: {0}")]
    Incompatible(String),

    /// Non-finite values or combinatorial guards tripped at runtime.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 config, 3 incompatibility, 4 runtime numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) => 2,
            Error::Incompatible(_) => 3,
            Error::Numeric(_) => 4,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
