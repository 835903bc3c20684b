//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numeric kernels and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The Fock cutoff leaves more tail mass than the configured tolerance.
    #[error("Fock cutoff too small: dim {dim} leaves tail mass {tail:.3e} for |alpha|^2 = {alpha_sq:.6} (tolerance {tol:.1e})")]
    CutoffTooSmall {
        alpha_sq: f64,
        dim: usize,
        tail: f64,
        tol: f64,
    },

    /// Two operands live in Fock spaces of different dimension.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A matrix that must be positive semidefinite has an eigenvalue below the
    /// numerical tolerance.
    #[error("matrix not numerically positive: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    /// Doubling the quadrature order still moves the result by more than the
    /// stability tolerance.
    #[error("quadrature not converged: doubling nodes changed result by {max_delta:.3e}")]
    QuadratureNotConverged { max_delta: f64 },

    /// No decision threshold could be located between the two hypotheses.
    #[error("threshold search failed: {0}")]
    ThresholdSearchFailed(String),

    /// The two alphabet amplitudes coincide.
    #[error("alphabet amplitudes are identical: a1 = a2 = {0}")]
    IdenticalAmplitudes(f64),

    /// A local search exceeded its iteration cap before the simplex collapsed.
    #[error("optimizer not converged after {iterations} iterations (simplex diameter {diameter:.3e})")]
    OptimizerNotConverged { iterations: usize, diameter: f64 },

    /// The arcsine inversion argument lies outside [-1, 1] beyond tolerance.
    #[error("phase inversion argument {argument:.6} outside [-1, 1]")]
    PhaseOutOfRange { argument: f64 },

    /// Too few bins for a stable width fit.
    #[error("insufficient bins: got {got}, need at least {need}")]
    InsufficientBins { got: usize, need: usize },

    /// Voltage line fit needs at least two distinct voltages.
    #[error("degenerate voltages: need at least two distinct values")]
    DegenerateVoltages,

    /// A hypothesis was never sampled, so its statistics are undefined.
    #[error("hypothesis {0} has no recorded shots")]
    EmptyHypothesis(usize),

    /// A parameter violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
