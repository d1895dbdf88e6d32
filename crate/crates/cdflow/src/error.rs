//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by measure construction, operators, certification and flows.
#[derive(Debug, Error)]
pub enum CdError {
    #[error("weight is not integrable: beta * deg(phi) = {decay} <= 1")]
    NonIntegrable { decay: f64 },

    #[error("weight is not uniformly convex: min phi'' = {min_d2} on the probe grid")]
    NonConvex { min_d2: f64 },

    #[error("grid function has {got} entries, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("dimension parameter n = {n} lies in the forbidden band [0, 1]")]
    DimensionForbidden { n: f64 },

    #[error("no certified (rho, n) pair with rho > 0 in the search box")]
    NoFeasiblePair,

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("curvature rho = {rho} must be positive")]
    NonpositiveCurvature { rho: f64 },

    #[error("flow lost positivity at t = {t}: min f = {min_f}")]
    PositivityLost { t: f64, min_f: f64 },

    #[error("entropy increased at t = {t} (step too large for dt)")]
    StepRejected { t: f64 },

    #[error("inverse iteration did not converge within {0} steps")]
    SolverStall(usize),

    #[error("denominator below 1e-14: test function is constant up to quadrature noise")]
    DegenerateDenominator,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl CdError {
    /// Process exit code for the CLI: 2 for validation errors, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CdError::PositivityLost { .. }
            | CdError::StepRejected { .. }
            | CdError::SolverStall(_)
            | CdError::NoFeasiblePair => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CdError>;
