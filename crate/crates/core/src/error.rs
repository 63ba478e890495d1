//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the precision-tuning toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid precision: {0} mantissa bits outside [2, 52]")]
    InvalidPrecision(u32),

    #[error("configuration has {got} precisions but benchmark declares {expected} variables")]
    ArityMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("invalid input set: {0}")]
    InvalidInput(String),

    #[error("invalid dependency graph: {0}")]
    Graph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("infeasible split: train {train} + test {test} exceeds {available} samples")]
    InfeasibleSplit {
        train: usize,
        test: usize,
        available: usize,
    },

    #[error("training diverged: non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
