//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SgError {
    /// A constructor argument violates a type invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Grid spacing or momentum coverage cannot resolve the state.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Grid extent truncates more probability mass than allowed.
    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    /// Probability mass reached the edge of the periodic grid.
    #[error("boundary mass violation: {0}")]
    BoundaryMass(String),

    /// The requested time step does not evenly divide the interval.
    #[error("non-divisible time step: {0}")]
    NonDivisibleStep(String),

    /// A per-branch quantity was requested from a branch with ~zero norm.
    #[error("empty branch: {0}")]
    EmptyBranch(String),

    /// Two grid states do not share the same grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Relative fluctuation is undefined when the mean position vanishes.
    #[error("relative fluctuation undefined: |<x>| = {0:e} is below 1e-9")]
    UndefinedAtZeroMean(f64),

    /// Jitter/ensemble specification is not a valid distribution.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}
