//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by shape ingestion, operator assembly, transport solvers
/// and the registration algorithms.
#[derive(Debug, Error)]
pub enum Error {
    /// A file could not be parsed under the requested format, or contained
    /// non-finite values.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Input violates a precondition (duplicate points, zero-area triangle,
    /// non-normalized weights, out-of-range index, bad schedule, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An operation that needs triangles was given a bare point cloud.
    #[error("missing connectivity: {0}")]
    MissingConnectivity(String),

    /// Mismatched dimensions between two arguments.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Problem exceeds a hard size guard (e.g. the dense transport solver).
    #[error("size limit exceeded: {0}")]
    SizeLimitExceeded(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
