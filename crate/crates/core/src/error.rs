use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operator, state or layout dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A density matrix fails a trace, Hermiticity or positivity check.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Time integration lost trace or produced non-finite values.
    #[error("integration diverged at t = {time} ns: {reason}")]
    Divergence { time: f64, reason: String },

    /// A response function was evaluated exactly on a real pole.
    #[error("response evaluated on a real pole at {0} rad/ns")]
    Pole(f64),

    /// Dressed eigenstates could not be matched unambiguously to bare states.
    #[error("ambiguous dressed-state tracking: {0}")]
    StateTracking(String),

    /// A drive schedule exceeds the adiabatic bound `kappa/4`.
    #[error("adiabaticity violated: peak coupling {peak} exceeds {limit} rad/ns")]
    Adiabaticity { peak: f64, limit: f64 },

    /// An iterative estimator failed to reach its tolerance.
    #[error("{method} did not converge after {iterations} iterations")]
    NonConvergence { method: &'static str, iterations: usize },

    /// The data do not determine the requested quantity.
    #[error("non-informative data: {0}")]
    NonInformative(String),

    /// A linear system or matrix inverse is singular or ill-conditioned.
    #[error("singular system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn dims(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
