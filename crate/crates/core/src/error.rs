//! Error type shared across the crate.

use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shape or size constraint violated (image dimensions, tensor dims, channel counts).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid compression spec (keep-count out of [0, 64]).
    #[error("compression spec error: {0}")]
    Spec(String),

    /// Incompatible configuration (weights vs. data, missing front layer, unknown arch).
    #[error("configuration error: {0}")]
    Config(String),

    /// Training loss became non-finite.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Dataset-level problem (empty class, no items).
    #[error("dataset error: {0}")]
    Dataset(String),

    /// Malformed file contents (PPM, FDT1, weights, arch spec).
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), msg: msg.into() }
    }
}
