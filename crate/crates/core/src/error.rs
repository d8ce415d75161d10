use thiserror::Error;

/// Errors raised by grid construction, field operations and time stepping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite wavefunction at step {step} (t = {t:e}): {detail}")]
    Instability { step: u64, t: f64, detail: String },

    #[error(
        "phase step too large at step {step}: max|V+W|*dt/hbar = {ratio:.4} exceeds pi/4; reduce dt"
    )]
    PhaseAliasing { step: u64, ratio: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("observer aborted the run: {0}")]
    Observer(String),
}

impl SolverError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SolverError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(SolverError::LengthMismatch { expected, actual });
    }
    Ok(())
}
