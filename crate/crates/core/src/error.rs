use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(String),
    #[error("unknown category {label:?} in column {column:?}")]
    UnknownCategory { column: String, label: String },
    #[error("non-numeric cell {cell:?} in column {column:?} (row {row})")]
    NotNumeric {
        column: String,
        row: usize,
        cell: String,
    },
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("insufficient rows: need {needed}, have {available}")]
    InsufficientRows { needed: usize, available: usize },
    #[error("not a permutation of the column names: {0}")]
    NotAPermutation(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("graph contains a directed cycle")]
    Cycle,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid scm: {0}")]
    InvalidScm(String),
    #[error("non-linear equation at node {0:?}")]
    NonLinear(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("sampler cannot handle target {0:?}")]
    UnsupportedTarget(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("treatment arm {0} missing")]
    MissingArm(f64),
    #[error("unpaired iterations: {0}")]
    Unpaired(String),
    #[error("config: {0}")]
    Config(String),
    #[error("bridge: {0}")]
    Bridge(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}
