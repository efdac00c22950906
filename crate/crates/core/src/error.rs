use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed header, magic or class table.
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("file truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    /// A single record (binary) or row (csv) is malformed.
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    /// Not enough classes, items or outlier samples to build what was asked for.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("task class {class} has no support items under its given label")]
    DegenerateClass { class: usize },

    #[error("cluster {cluster} received zero total weight")]
    DegenerateCluster { cluster: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("episode {episode}: {source}")]
    Episode {
        episode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
