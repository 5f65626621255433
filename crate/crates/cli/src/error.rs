use std::process::ExitCode;

use thiserror::Error;

/// CLI failure classes, each with its own exit code so callers can
/// distinguish configuration problems from solver or data failures.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("io: {0}")]
    Io(String),

    #[error("config: {0}")]
    Config(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("empty distribution: {0}")]
    EmptyDistribution(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::EmptyDistribution(_) => 4,
        })
    }

    pub fn io(context: &str, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
