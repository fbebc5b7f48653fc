use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the HOPGR pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid-parameter: {0}")]
    InvalidParameter(String),

    #[error("image-too-small: image is {width}x{height}, kernel side is {side}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        side: usize,
    },

    #[error("empty-corpus: no images to accumulate")]
    EmptyCorpus,

    #[error("invalid-count: requested {requested} directions out of {available}")]
    InvalidCount { requested: usize, available: usize },

    #[error("malformed-file: line {line}, field `{field}`: {reason}")]
    MalformedFile {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("dimension-mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid-too-small: {cells_x}x{cells_y} cells cannot hold a {block_w}x{block_h} block")]
    GridTooSmall {
        cells_x: usize,
        cells_y: usize,
        block_w: usize,
        block_h: usize,
    },

    #[error("prior-mismatch: {0}")]
    PriorMismatch(String),

    #[error("layout-mismatch: {0}")]
    LayoutMismatch(String),

    #[error("insufficient-classes: {0}")]
    InsufficientClasses(String),

    #[error("empty-scores: genuine={genuine} impostor={impostor}")]
    EmptyScores { genuine: usize, impostor: usize },

    #[error("invalid-spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported-format: {reason} (byte offset {offset})")]
    UnsupportedFormat { offset: usize, reason: String },

    #[error("wrong-dimensions: expected {expected_w}x{expected_h}, got {width}x{height}")]
    WrongDimensions {
        expected_w: usize,
        expected_h: usize,
        width: usize,
        height: usize,
    },

    #[error("empty-dataset: no images under {0}")]
    EmptyDataset(PathBuf),

    #[error("duplicate-entry: class `{class_id}` sample `{sample_id}`")]
    DuplicateEntry { class_id: String, sample_id: String },

    #[error("io-error: {0}")]
    Io(#[from] io::Error),
}

/// Coarse failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data or parameters.
    Data,
    /// Artifacts that cannot be combined (prior vs bank, descriptor layouts).
    Compatibility,
    /// Filesystem failures.
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::PriorMismatch(_) | Error::LayoutMismatch(_) => ErrorClass::Compatibility,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn malformed(line: usize, field: &str, reason: impl Into<String>) -> Self {
        Error::MalformedFile {
            line,
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
