use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid {what}: {reason}")]
    InvalidValue { what: &'static str, reason: String },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("normalization failure: {0}")]
    Normalization(String),

    #[error("time step {dt:.3e} exceeds stability bound {bound:.3e}")]
    StabilityBound { dt: f64, bound: f64 },

    #[error("state reached the grid edge (edge weight {weight:.3e}) at step {step}")]
    GridSupport { weight: f64, step: usize },

    #[error("positivity watch: smallest eigenvalue {min_eigenvalue:.3e} below {bound:.1e}")]
    Positivity { min_eigenvalue: f64, bound: f64 },

    #[error("oscillator truncation insufficient: top-level population {population:.3e}")]
    Truncation { population: f64 },

    #[error("tomography frame is singular (smallest frame eigenvalue {min_eigenvalue:.3e})")]
    SingularFrame { min_eigenvalue: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for numerical guards that fire mid-computation, as opposed to
    /// input validation failures.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Error::GridSupport { .. }
                | Error::Positivity { .. }
                | Error::Truncation { .. }
                | Error::Normalization(_)
        )
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidValue { what, reason: reason.into() }
    }
}
