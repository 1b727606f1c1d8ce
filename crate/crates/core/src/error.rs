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
    /// Bad magic, unsupported version, or malformed header/catalog.
    #[error("format error: {0}")]
    Format(String),
    /// Two stores (or a store and its header) disagree on shape.
    #[error("consistency error: {0}")]
    Consistency(String),
    /// Payload does not decode to what the header promises.
    #[error("corruption: {0}")]
    Corruption(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: config=2, format=3, runtime=4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Format(_) | Error::Consistency(_) | Error::Corruption(_) => 3,
            Error::Io { .. } | Error::InvalidInput(_) => 4,
        }
    }
}
