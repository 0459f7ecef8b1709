use std::path::PathBuf;

use qbc_core::QbcError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad user input: dimension, suite name, flag combination.
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] QbcError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
