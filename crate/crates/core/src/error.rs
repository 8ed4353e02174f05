use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("basis index {index} is not valid for the {basis} basis")]
    InvalidIndex { index: usize, basis: &'static str },

    #[error("truncation size {n} is below the minimum of {min}")]
    TruncationTooSmall { n: usize, min: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigenvalue iteration did not converge after {iterations} iterations ({remaining} eigenvalues left)")]
    NoConvergence { iterations: usize, remaining: usize },

    #[error(
        "spectrum not converged up to N = {n_max}: last iterates {previous:?} vs {last:?}"
    )]
    TruncationNotConverged {
        n_max: usize,
        previous: Vec<Complex64>,
        last: Vec<Complex64>,
    },

    #[error("complex eigenvalues could not be paired into conjugates: {0:?}")]
    UnpairedComplex(Vec<Complex64>),

    #[error("integrator step size underflow at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("secant refinement failed from seed {seed}: {reason}")]
    RefinementFailed { seed: Complex64, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("lines are not comparable: {0}")]
    LineMismatch(String),

    #[error("power-law fit: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
