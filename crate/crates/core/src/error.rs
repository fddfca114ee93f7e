use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the extraction and experiment pipeline.
///
/// Statistics and features that are merely undefined on a given input are not
/// errors; they are reported as missing values (`None`) instead.
#[derive(Debug, Error)]
pub enum VoxError {
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("unsupported audio encoding in {path}: {reason}")]
    Unsupported { path: PathBuf, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VoxError>;
