use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("column has zero variance")]
    ConstantColumn,

    #[error("degenerate range: lo = {lo}, hi = {hi}")]
    DegenerateRange { lo: f64, hi: f64 },

    #[error("standard deviation needs at least 2 values, got {len}")]
    StdUndefined { len: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("supervised loss needs the true label")]
    MissingLabel,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Load {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("corruption error: {0}")]
    Corruption(String),

    #[error("training diverged at epoch {epoch}, batch {batch} (loss = {loss})")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("every configuration failed: {}", failures.join("; "))]
    Selection { failures: Vec<String> },

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("order error: {0}")]
    Order(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
