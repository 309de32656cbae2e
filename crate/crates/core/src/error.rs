use thiserror::Error;

/// Errors raised by dataset loading, rule evaluation and graph analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target column not found: {0}")]
    TargetNotFound(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },

    #[error("unknown class label '{label}' (valid labels: {valid})")]
    UnknownClass { label: String, valid: String },

    #[error("unknown feature(s): {0}")]
    UnknownFeature(String),

    #[error("feature '{feature}': {msg}")]
    KindMismatch { feature: String, msg: String },

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("feature sets differ: {0}")]
    FeatureMismatch(String),

    #[error("metric mismatch: {0} vs {1}")]
    MetricMismatch(String, String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("unknown format: {0}")]
    UnknownFormat(String),

    #[error("{0}")]
    Insufficient(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
