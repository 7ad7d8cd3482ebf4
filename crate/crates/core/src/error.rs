use thiserror::Error;

use crate::network::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Row indices are 0-based; node ids
/// display 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid matrix at row {row} (node {}): {reason}", .row + 1)]
    InvalidMatrix { row: usize, reason: String },

    #[error("node index {index} out of range for a network with {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("matrix is not stochastic (worst row sum {worst_row_sum})")]
    NotStochastic { worst_row_sum: f64 },

    #[error("operation requires a strictly substochastic matrix")]
    NotSubstochastic,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("cutset contains source or target vertex {node}")]
    Overlap { node: NodeId },

    #[error("cutset does not separate the sources from target {target}")]
    NotSevered { target: NodeId },

    #[error("network has {n} vertices; exhaustive cutset enumeration is limited to {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("no separating cutset exists: direct edge {from} -> {target}")]
    NoCutExists { from: NodeId, target: NodeId },

    #[error("system is not asymptotically stable (spectral radius {spectral_radius})")]
    UnstableSystem { spectral_radius: f64 },

    #[error("resolvent is singular at omega = {omega}")]
    SingularAtOmega { omega: f64 },

    #[error("resolvent solve at omega = {omega} left residual {residual:e}")]
    IllConditioned { omega: f64, residual: f64 },

    #[error("input node {node} listed more than once")]
    DuplicateInput { node: NodeId },

    #[error("length mismatch: need at least {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sinusoidal fit did not settle (residual {residual:e}, amplitude {amplitude:e})")]
    Unsettled { residual: f64, amplitude: f64 },

    #[error("node {node} has a saturated self-loop (a_qq = 1)")]
    SelfLoopSaturated { node: NodeId },

    #[error("complex-valued input requires complex simulation")]
    ComplexInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
