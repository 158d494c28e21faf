use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("optimization diverged at step {0}")]
    Diverged(usize),
    #[error("{0} check(s) failed")]
    CheckFailed(usize),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    /// 0 ok, 1 check failure, 2 configuration/input error, 3 no solution,
    /// 4 diverged.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::CheckFailed(_) => 1,
            Self::Config(_) | Self::Io { .. } | Self::Internal(_) => 2,
            Self::NoSolution(_) => 3,
            Self::Diverged(_) => 4,
        }
    }
}
