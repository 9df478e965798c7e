use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("move error: {0}")]
    Move(String),
    #[error("unplayable board: no valid configuration after {attempts} reshuffles")]
    Unplayable { attempts: usize },
    #[error("level parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("level validation error: {0}")]
    Validation(String),
    #[error("lifecycle error: {0}")]
    Lifecycle(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("mode error: {0}")]
    Mode(String),
    #[error("index error: {index} not in 0..{len}")]
    Index { index: usize, len: usize },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("no valid move available")]
    NoMove,
    #[error("batch error: {0}")]
    Batch(String),
    #[error("checkpoint error in `{section}`: {message}")]
    Checkpoint { section: String, message: String },
    #[error("file error on {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
