use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Byte-level format problems, independent of where the bytes came from.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload holds {actual} bytes, expected {expected}")]
    Payload { expected: usize, actual: usize },
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Core(#[from] tomkit_core::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] tomkit_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: impl Into<FormatError>) -> Self {
        Error::Format {
            path: path.into(),
            source: source.into(),
        }
    }
}
