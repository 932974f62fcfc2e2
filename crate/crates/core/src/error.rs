use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed input: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    BadLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate example id {id:?} at {first} and {second}")]
    DuplicateId {
        id: String,
        first: String,
        second: String,
    },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("span offsets ({start}, {end}) exceed context length {len} for example {id:?}")]
    OffsetOutOfRange {
        id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("prediction set for {prediction:?} scored against example {example:?}")]
    IdMismatch { prediction: String, example: String },

    #[error("{count} example id(s) missing, first: {first:?}")]
    MissingIds { count: usize, first: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("no data: {0}")]
    Empty(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn missing_ids<S: AsRef<str>>(ids: &[S]) -> Self {
        Error::MissingIds {
            count: ids.len(),
            first: ids.first().map(|s| s.as_ref().to_string()).unwrap_or_default(),
        }
    }
}
