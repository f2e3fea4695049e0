use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model reached a state where a normalisation has nothing to normalise.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical verification exceeded its tolerance.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line harness.
    ///
    /// `1` usage or configuration problems, `2` failed verification, `3` I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification(_) => 2,
            Error::Io { .. } | Error::Csv(_) => 3,
            Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Shape { .. }
            | Error::Config(_)
            | Error::Json(_) => 1,
        }
    }
}
