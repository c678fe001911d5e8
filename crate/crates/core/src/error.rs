use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate vector (norm {norm:e} below {eps:e})")]
    DegenerateVector { norm: f64, eps: f64 },

    #[error("invalid rectangle rows {row0}..{row1}, cols {col0}..{col1} on a {rows}x{cols} raster")]
    InvalidRect {
        row0: usize,
        row1: usize,
        col0: usize,
        col1: usize,
        rows: usize,
        cols: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown word: {0}")]
    UnknownWord(String),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("unsatisfiable scene spec: {0}")]
    Spec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
