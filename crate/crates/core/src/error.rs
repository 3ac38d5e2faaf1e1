use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },

    #[error("duplicate judgment for query `{query_id}`, doc `{doc_id}` (line {line})")]
    DuplicateJudgment {
        line: usize,
        query_id: String,
        doc_id: String,
    },

    #[error("query `{query_id}`: {message}")]
    RunOrder { query_id: String, message: String },

    #[error("invalid train instance `{query_id}`: {message}")]
    InvalidInstance { query_id: String, message: String },

    #[error("{path}: byte offset {offset}: {message}")]
    Binary {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("zero-norm embedding row for id `{0}`")]
    ZeroNorm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("query sets differ across runs; symmetric difference: {0:?}")]
    QuerySetMismatch(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
