use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OcrError>;

#[derive(Debug, Error)]
pub enum OcrError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient ink: found {found} pixel(s), need at least {needed}")]
    InsufficientInk { found: usize, needed: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("unmappable character {ch:?} (U+{:04X})", *ch as u32)]
    UnmappableCharacter { ch: char },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("page skipped: {0}")]
    PageMismatch(String),

    #[error("image decode {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl OcrError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OcrError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        OcrError::InvalidInput(msg.into())
    }
}
