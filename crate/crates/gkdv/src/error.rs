use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of the driver; [`CliError::exit_code`] maps them onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] gkdv_core::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("acceptance checks failed: {0}")]
    Acceptance(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Acceptance(_) => 4,
            CliError::Numeric(_) | CliError::Format(_) | CliError::Io { .. } => 3,
        }
    }
}
