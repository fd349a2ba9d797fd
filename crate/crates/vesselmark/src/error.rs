use std::io;
use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{path}: malformed row {row}: {msg}")]
    MalformedRow { path: PathBuf, row: u64, msg: String },
    #[error("{path}: column `{column}` is not in millimetres")]
    UnitMismatch { path: PathBuf, column: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] vesselmark_core::Error),
}

impl Error {
    /// Wraps an I/O error, turning "not found" into [`Error::MissingFile`].
    pub fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::Io { path: path.to_path_buf(), source }
        }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        Error::Format { path: path.to_path_buf(), msg: msg.into() }
    }
}
