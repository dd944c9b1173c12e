use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("the zero pair has no projective class")]
    ZeroPair,

    #[error("singular group element (|det| = {0:e})")]
    SingularGroupElement(f64),

    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("invalid pair: {0}")]
    InvalidPair(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("pair is not critical (residual {residual:e} > {tolerance:e})")]
    NotCritical { residual: f64, tolerance: f64 },

    #[error("rational reconstruction failed (residual {residual:e}, max denominator {max_den})")]
    Reconstruction { residual: f64, max_den: u64 },

    #[error("ill-conditioned splitting: {0}")]
    IllConditioned(String),

    #[error("flow left the variety: residual {residual:e} exceeds guard {guard:e} at step {step}")]
    ResidualGuard { residual: f64, guard: f64, step: usize },

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
