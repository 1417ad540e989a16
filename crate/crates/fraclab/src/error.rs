use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("mode {mode:?} outside truncation {limit:?}")]
    ModeOutOfRange { mode: Vec<usize>, limit: Vec<usize> },
    #[error("point {0:?} outside the closed domain")]
    PointOutside(Vec<f64>),
    #[error("invalid face: axis {axis} in dimension {dim}")]
    InvalidFace { axis: usize, dim: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("ill-conditioned Galerkin system (condition number {cond:.3e}); zero may be a Dirichlet eigenvalue of the shifted operator")]
    IllConditioned { cond: f64 },
    #[error("Born series refused: spectral radius estimate {radius:.4} >= 1")]
    NotContractive { radius: f64 },
    #[error("smallness violated: sup|q| = {sup:.4e} exceeds {limit:.4e}")]
    Smallness { sup: f64, limit: f64 },
    #[error("boundary flatness violated: {0}")]
    NotFlat(String),
    #[error("phase vectors not orthonormal (defect {0:.3e})")]
    NotOrthonormal(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
