use thiserror::Error;

use crate::solvers::IterationHistory;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("block structure mismatch: {0}")]
    ShapeMismatch(String),
    #[error("component index {index} out of range for {count} blocks")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate constraint: {0}")]
    DegenerateConstraint(String),
    #[error("degenerate column: {0}")]
    DegenerateColumn(String),
    #[error("weight error: {0}")]
    Weight(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("generation failed: {0}")]
    Generation(String),
    /// An iteration produced a non-finite coordinate. The partial history up
    /// to the last finite iterate is carried along.
    #[error("iteration diverged after {iterations} steps")]
    Diverged {
        iterations: usize,
        history: Box<IterationHistory>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
