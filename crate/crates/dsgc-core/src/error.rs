//! Crate-wide error type.

use thiserror::Error;

use crate::eigen::EigenError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("time series row {0} has zero variance")]
    ZeroVariance(usize),
    #[error("degenerate violation ratio: no non-violated edges")]
    DegenerateViolationRatio,
    #[error("graph invariant violated: {0}")]
    InvalidGraph(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("empty edge class: {0}")]
    EmptyEdgeClass(String),
    #[error("k-means failed: {0}")]
    KMeans(String),
}

pub type Result<T> = std::result::Result<T, Error>;
