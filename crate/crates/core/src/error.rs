use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix failed its Hermiticity (or shape) certification.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// The eigensolver or another dense kernel failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The tracked eigenvalue touched another eigenvalue.
    #[error("gap collapse at s = {s}: gap {gap:.3e} is below tolerance {tolerance:.3e}")]
    GapCollapse { s: f64, gap: f64, tolerance: f64 },

    /// Consecutive eigenvectors on the tracking grid overlap too little.
    #[error(
        "under-resolved grid between s = {s_prev} and s = {s}: overlap {overlap:.3} < 0.5; refine the grid"
    )]
    UnderResolved { s_prev: f64, s: f64, overlap: f64 },

    /// Step doubling hit the configured step ceiling.
    #[error("adaptive evolution did not converge below {tolerance:.3e} before L = {steps} exceeded the ceiling {ceiling}")]
    NonConvergence {
        steps: u64,
        ceiling: u64,
        tolerance: f64,
    },

    /// The requested run is too expensive for the configured resource limits.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A state lost normalization beyond roundoff during evolution.
    #[error("numerical instability at step {step}: norm drift {drift:.3e}")]
    Instability { step: u64, drift: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
