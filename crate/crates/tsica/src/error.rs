use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unrecognized format: neither the magic field nor the header size is plausible")]
    UnrecognizedFormat,
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("unsupported dimensions: {0}")]
    UnsupportedDimensions(String),
    #[error("header truncated: {0} bytes, 348 expected")]
    TruncatedHeader(usize),
    #[error("data truncated: {expected} bytes expected, {found} available")]
    TruncatedData { expected: usize, found: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("header does not match volume: {0}")]
    HeaderVolumeMismatch(String),
    #[error("{axis} slice {index} out of range (extent {extent})")]
    SliceOutOfRange {
        axis: &'static str,
        index: usize,
        extent: usize,
    },
    #[error("sample {value} cannot be stored as {datatype}")]
    ValueOutOfRange { value: f64, datatype: &'static str },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("malformed table: {0}")]
    Table(String),
    #[error(transparent)]
    Core(#[from] tsica_core::Error),
}

impl IoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;
