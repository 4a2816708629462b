//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent model dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Malformed model bytes (bad magic, version, or truncation).
    #[error("format error: {0}")]
    Format(String),

    /// Model bytes decoded but contain non-finite values.
    #[error("corrupt model: {0}")]
    Corruption(String),

    /// Training data cannot support the requested operation
    /// (e.g. zero variance on an axis).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array lengths incompatible with the requested operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// Non-finite values encountered during computation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid run configuration (e.g. single-animal cross-validation).
    #[error("configuration error: {0}")]
    Config(String),

    /// Synthetic generation produced out-of-range values.
    #[error("generation error: {0}")]
    Generation(String),

    /// Malformed input file contents.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
