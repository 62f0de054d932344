use thiserror::Error;

/// Errors produced across the crate. Variants map onto the CLI exit-code
/// classes: config (2), data (3), io (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("action index {index} out of range for K={k}")]
    Action { index: usize, k: usize },

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient or invalid data: {0}")]
    Data(String),

    #[error("cannot parse cell at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("bandit stream exhausted at step {0}")]
    StreamExhausted(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
