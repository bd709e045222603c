use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("repeated eigenvalue at positions {first} and {second}")]
    RepeatedEigenvalue { first: usize, second: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("recurrence breakdown at degree {degree}: {reason}")]
    Breakdown { degree: usize, reason: String },

    #[error("eigen-residual {residual:e} exceeds tolerance {tolerance:e}")]
    EigenResidual { residual: f64, tolerance: f64 },

    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("perturbative reduction diverges: edge/middle gap {gap} below {threshold}")]
    PerturbativeBreakdown { gap: f64, threshold: f64 },

    #[error("infeasible cascade: segment {segment} needs J_sub = {j_sub:e} < J_min = {j_min:e}")]
    Infeasible { segment: usize, j_sub: f64, j_min: f64 },
}

impl Error {
    /// True for failures of the numerics (as opposed to rejected inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Breakdown { .. }
                | Error::EigenResidual { .. }
                | Error::Integrator { .. }
                | Error::PerturbativeBreakdown { .. }
                | Error::Infeasible { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
