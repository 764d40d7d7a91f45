use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("region of interest {roi} cannot hold a {patch}x{patch} patch")]
    RoiTooSmall { roi: String, patch: u32 },

    #[error("defect synthesis failed after {attempts} attempts: {reason}")]
    SynthesisFailed { attempts: u32, reason: String },

    #[error("real-defect pool is empty{0}")]
    EmptyPool(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dataset layout: {0}")]
    Layout(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {reason}")]
    Map { path: PathBuf, reason: String },

    #[error("container {path}: {source}")]
    Container {
        path: PathBuf,
        #[source]
        source: hdf5::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the failure came from the filesystem or a storage library
    /// rather than from invalid input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Container { .. } => true,
            Error::Image { source, .. } => matches!(source, image::ImageError::IoError(_)),
            Error::Csv { source, .. } => source.is_io_error(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn container(path: impl Into<PathBuf>, source: hdf5::Error) -> Self {
        Error::Container { path: path.into(), source }
    }
}
