//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("padding violation: {0}")]
    Padding(String),
    #[error("shape not strictly mean convex: {0}")]
    NotMeanConvex(String),
    #[error("mask has no interface (empty or full)")]
    NoInterface,
    #[error("free region too large: {got} cells (max {max})")]
    RegionTooLarge { got: usize, max: usize },
    #[error("invalid solver params: {0}")]
    InvalidParams(String),
    #[error("solver produced NaN at iteration {0}")]
    SolverNan(usize),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("file format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
