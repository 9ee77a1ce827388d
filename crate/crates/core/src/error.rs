use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain supported by a routine.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root bracket could not be certified or an iteration did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The dense eigensolver failed.
    #[error("eigensolver failure on a {size}x{size} block (max |entry| = {max_abs:.3e}): {reason}")]
    Eigensolver {
        size: usize,
        max_abs: f64,
        reason: String,
    },

    /// Matrix exponential could not be evaluated.
    #[error("matrix exponential failed (1-norm {norm:.3e}): {reason}")]
    MatrixExponential { norm: f64, reason: String },

    /// Two inputs that must agree in shape or geometry do not.
    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
