//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor or query was given parameters outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested power sum diverges for this family.
    #[error("divergent norm: {0}")]
    DivergentNorm(String),

    /// The tail threshold does not exceed |alpha| * sum(a_n), so the scaled
    /// Gaussian argument would be non-positive.
    #[error("threshold {r} does not exceed |alpha|*sum(a) = {floor}")]
    ThresholdTooSmall { r: f64, floor: f64 },

    #[error("exponent out of range: {0}")]
    BadExponent(String),

    /// A comparison factor 2 - rho_n or 2 - 1/rho_n is not positive.
    #[error("non-positive comparison factor at n = {n} (value {value})")]
    NonpositiveFactor { n: u64, value: f64 },

    /// Some product factor 1 +- x_n vanishes exactly.
    #[error("zero product factor at n = {n}")]
    ZeroFactor { n: u64 },

    #[error("infeasible rate problem: {0}")]
    Infeasible(String),

    #[error("did not converge: gap {gap} above tolerance {tol} after {iterations} iterations")]
    Nonconverged { tol: f64, gap: f64, iterations: u64 },

    #[error("sequence is not monotone: {0}")]
    NotMonotone(String),

    /// Tilting was requested below the truncated mean; a plain estimate is
    /// the right tool there.
    #[error("threshold {r} is at or below the truncated mean {mean}")]
    BelowMean { r: f64, mean: f64 },

    /// No tilt parameter exists inside the cumulant domain.
    #[error("tilt domain error: {0}")]
    Domain(String),

    /// An analytic summability hypothesis fails for these inputs.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// The inequality fails even for arbitrarily small delta, which the
    /// two-sided bound rules out; indicates a harness bug or a bad grid.
    #[error("no valid delta radius: {0}")]
    NoValidLambda(String),
}

pub type Result<T> = std::result::Result<T, Error>;
