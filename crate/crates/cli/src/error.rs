use std::path::Path;

use thiserror::Error;

/// Failures split by exit status: domain failures (invalid input content,
/// evaluation errors) exit 1, environment failures (I/O, bad flags) exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Env(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Env(_) => 2,
        }
    }

    pub fn domain(msg: impl std::fmt::Display) -> Self {
        CliError::Domain(msg.to_string())
    }

    pub fn env(msg: impl std::fmt::Display) -> Self {
        CliError::Env(msg.to_string())
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Env(format!("{}: {e}", path.display()))
    }
}
