//! CLI error type and exit codes.

use std::path::Path;
use thiserror::Error;

/// Exit code for malformed command lines.
pub const EXIT_USAGE: i32 = 64;

/// Failure of a subcommand.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hitchin_core::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// `1` for input and domain problems, `2` for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_domain() => 2,
            _ => 1,
        }
    }
}
