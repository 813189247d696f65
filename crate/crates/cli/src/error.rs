use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Exit codes of the `saddlepoint` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Structural = 1,
    NotConverged = 2,
    CertificateFailed = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Errors that stop a command before it produces a result. All of them map
/// to exit code 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Solver(#[from] saddlepoint::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Structural(String),
}

impl CliError {
    pub fn structural(msg: impl Into<String>) -> Self {
        CliError::Structural(msg.into())
    }
}
