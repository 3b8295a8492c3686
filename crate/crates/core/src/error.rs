use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the change-point toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("interval [{a}, {b}] has length {len}; at least 8 points are required")]
    IntervalTooShort { a: usize, b: usize, len: usize },

    #[error("unsupported table format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed table file: {0}")]
    Format(String),

    #[error("table mismatch: {0}")]
    TableMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
