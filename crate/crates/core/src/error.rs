use std::path::PathBuf;

use thiserror::Error;

use crate::keepmix::MixMode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected:?} (width, height), found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("mask value {value} at index {index} is not 0 or 1")]
    NonBinaryMask { index: usize, value: f64 },

    #[error("intensity {value} at index {index} is outside [0, 1] or not finite")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no eligible {mode} partner with has_organ={needed_organ} for anchor {anchor}")]
    NoEligiblePartner {
        anchor: usize,
        mode: MixMode,
        needed_organ: bool,
    },

    #[error("anchor index {index} is out of range for a dataset of {len} samples")]
    AnchorOutOfRange { index: usize, len: usize },

    #[error("mix pair role violation: {0}")]
    InvalidPair(&'static str),

    #[error("augmentation policy has no operators")]
    EmptyPolicy,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("batch size must be at least 1")]
    InvalidBatchSize,

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("unsupported format in {path}: {detail}")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("missing prediction for slice {slice_id} (expected {path})")]
    MissingPrediction { slice_id: String, path: PathBuf },

    #[error("unknown sample {0:?}")]
    UnknownSample(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
