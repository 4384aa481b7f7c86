use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },

    #[error("{path}: truncated, expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: usize, found: usize },

    #[error("{path}: {extra} unexpected trailing bytes")]
    TrailingBytes { path: PathBuf, extra: usize },

    #[error("{path}: size {len} is not a whole number of {record}-byte records")]
    RecordSize { path: PathBuf, len: usize, record: usize },

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid dataset: {0}")]
    Invalid(String),

    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),

    #[error("split leaves the {0} side empty")]
    EmptySplit(&'static str),

    #[error("subset of {requested} requested from {available} samples")]
    SubsetTooLarge { requested: usize, available: usize },

    #[error("batch size must be at least 1")]
    ZeroBatchSize,
}

pub type Result<T> = std::result::Result<T, DataError>;

pub(crate) fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}
