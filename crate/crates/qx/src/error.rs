use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: duplicate judgement for query {query_id}, document {doc_id}")]
    DuplicateJudgement {
        line: usize,
        query_id: String,
        doc_id: String,
    },

    #[error("run {run_tag}: duplicate document {doc_id} for query {query_id}")]
    DuplicateDocument {
        run_tag: String,
        query_id: String,
        doc_id: String,
    },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query {0} has no positive judgement")]
    NoPositiveQrels(String),

    #[error("no vector for document {0}")]
    MissingVector(String),

    #[error("document {0} not present in the corpus")]
    MissingDocument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("Kendall's tau undefined: {0}")]
    UndefinedTau(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code class: 1 usage, 2 data/parse, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 1,
            Error::DimensionMismatch { .. } | Error::UndefinedTau(_) | Error::Numeric(_) => 3,
            _ => 2,
        }
    }

    /// Attach a file path to a bare I/O error.
    pub fn with_path(self, path: &std::path::Path) -> Error {
        match self {
            Error::Io(source) => Error::File {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        }
    }
}
