use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BopError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Missing or malformed content; `key` locates it inside the file.
    #[error("{file}: {key}: {msg}")]
    Parse { file: PathBuf, key: String, msg: String },
    #[error("{path}: {msg}")]
    Png { path: PathBuf, msg: String },
    /// Values that parse but violate a geometric invariant.
    #[error("{file}: {key}: {source}")]
    Invalid {
        file: PathBuf,
        key: String,
        source: nocs9d_core::Error,
    },
    /// Files that disagree with each other.
    #[error("integrity error: {0}")]
    Integrity(String),
}

pub type Result<T, E = BopError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BopError {
    let path = path.into();
    move |source| BopError::Io { path, source }
}

pub(crate) fn parse_err(file: &std::path::Path, key: impl Into<String>, msg: impl Into<String>) -> BopError {
    BopError::Parse {
        file: file.to_path_buf(),
        key: key.into(),
        msg: msg.into(),
    }
}
