//! Crate-wide error type.

/// Errors raised by the numerical routines.
///
/// `Domain`, `Config`, and `Infeasible` are validation failures (bad inputs
/// or parameters); the remaining variants report failures that arise while a
/// computation is running.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structural misconfiguration (grid sizes, missing data, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A profile violated the feasible set {rho >= 0, mean = A}.
    #[error("infeasible profile: {0}")]
    Infeasible(String),

    /// Evaluation at a singular point (pole of zeta, kernel at z = 0, ...).
    #[error("singularity: {0}")]
    Singularity(String),

    /// Step ordering broke down during discrete dynamics.
    #[error("step crossing at t = {time}: {context}")]
    StepCrossing { time: f64, context: String },

    /// The continuum slope touched zero during evolution (vacuum formation).
    #[error("degenerate slope at t = {time}: step density reached zero")]
    DegenerateSlope { time: f64 },

    /// Generic numerical failure (non-finite values, no convergence, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that indicate bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Infeasible(_) | Error::Singularity(_)
        )
    }
}
