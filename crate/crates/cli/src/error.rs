use std::fmt::Display;

use thiserror::Error;

/// Failures surfaced by the command-line front end, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] retrosmooth::Error),
}

impl CliError {
    pub fn config(field: &str, err: impl Display) -> Self {
        Self::Config(format!("field `{field}`: {err}"))
    }

    pub fn io(path: &std::path::Path, err: impl Display) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }

    /// 1 for verification failures, 2 for configuration and input problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Verification(_) => 1,
            Self::Config(_) | Self::Io(_) | Self::Core(_) => 2,
        }
    }
}
