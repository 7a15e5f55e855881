use thiserror::Error;

/// Errors raised by the reduction, propagation and wave-function layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("t = {t} lies outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}] (estimate {estimate:e})")]
    QuadratureFailure { a: f64, b: f64, tol: f64, estimate: f64 },

    #[error("ODE solver failed at t = {t}: {reason}")]
    SolverFailure { t: f64, reason: String },

    #[error("normal_frequency: squared frequency {value} <= 0 at t = {t} (mode {mode})")]
    InvalidFrequency { mode: usize, t: f64, value: f64 },

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("rho vanishes (rho = {0})")]
    ZeroRho(f64),

    #[error("quantum number {n} exceeds the supported maximum {max}")]
    Overflow { n: usize, max: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{check}: {message}")]
    InvalidScenario { check: &'static str, message: String },
}

impl Error {
    /// True for errors that describe physics outside the supported solution class
    /// (as opposed to malformed input or numerical failure).
    pub fn is_physics(&self) -> bool {
        matches!(self, Error::InvalidFrequency { .. } | Error::InvalidScenario { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
