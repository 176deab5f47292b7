//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by streams, models and learners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A CSV row that could not be parsed; `row` is the 0-based data row index.
    #[error("malformed row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid stream spec: {0}")]
    SpecFile(String),

    #[error("data error: {0}")]
    Data(String),

    /// A non-finite value was produced where a finite one is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
