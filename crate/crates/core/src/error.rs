use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] io::Error),

    #[error("format mismatch: {malformed} of {total} lines malformed; first offending line {line_no}: {line:?}")]
    FormatMismatch {
        malformed: usize,
        total: usize,
        line_no: usize,
        line: String,
    },

    #[error("malformed input at line {line_no}: {reason}")]
    Malformed { line_no: usize, reason: String },

    #[error("invalid configuration for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unknown {kind} `{id}`")]
    Lookup { kind: &'static str, id: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    /// Short stable tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Stream(_) => "io",
            Error::FormatMismatch { .. } => "format-mismatch",
            Error::Malformed { .. } => "malformed",
            Error::InvalidConfig { .. } => "invalid-config",
            Error::Empty(_) => "empty",
            Error::Lookup { .. } => "lookup",
            Error::Contract(_) => "contract",
            Error::Checkpoint(_) => "checkpoint",
            Error::Serde(_) => "serialization",
        }
    }
}
