use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::bundle::BundleError;

/// Exit codes: 0 success, 1 usage or I/O, 2 data or schema violation.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Bundle(#[from] BundleError),

    #[error("{0}")]
    Core(#[from] gradecast_core::Error),

    /// Data problems already reported on stdout.
    #[error("{0}")]
    Violations(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Bundle(_) => 1,
            CliError::Core(e) if e.is_data_error() => 2,
            CliError::Core(_) => 1,
            CliError::Violations(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
