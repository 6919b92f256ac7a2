use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unsupported schema version {found:?} in {context} (expected {expected:?})")]
    Version {
        context: String,
        found: String,
        expected: &'static str,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for anything the caller can fix by
    /// changing inputs, 3 for solver and environment failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Parse { .. } | Error::Version { .. } | Error::Validation(_) => 2,
            Error::Solver(_) | Error::Io { .. } => 3,
        }
    }
}
