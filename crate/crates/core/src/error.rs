use thiserror::Error;

/// Errors raised by the surrogate-minimization library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurroError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("internal numerical failure: {0}")]
    InternalNumericalFailure(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point is not feasible for the domain: {0}")]
    InfeasibleInput(String),

    #[error("point lies outside the mirror-map domain")]
    OutsideMirrorDomain,

    #[error("inner minimization failed after {iterations} iterations (projected-gradient norm {residual:e})")]
    InnerSolveFailed { iterations: usize, residual: f64 },

    #[error("inner minimization failed at iterate {index}: {source}")]
    IterationFailed {
        index: usize,
        #[source]
        source: Box<SurroError>,
    },

    #[error("Bregman projection failed: {0}")]
    ProjectionFailed(String),

    #[error("domain is incompatible with the mirror map: {0}")]
    IncompatibleDomain(String),

    #[error("empty data set")]
    EmptyData,

    #[error("quadrature did not reach tolerance {tolerance:e} at {nodes} nodes")]
    QuadratureFailure { tolerance: f64, nodes: usize },

    #[error("Hessian is singular at the current point")]
    SingularHessian,

    #[error("direction space is trivial (d = 0)")]
    DegenerateDomain,

    #[error("finite-difference perturbation produced a non-finite evaluation")]
    InfeasiblePerturbation,

    #[error("domination assumption violated: reduced A is not positive-definite (min eigenvalue {min_eigenvalue:e})")]
    H4Violated { min_eigenvalue: f64 },

    #[error("analysis window too short: {usable} usable points, need {needed}")]
    WindowTooShort { usable: usize, needed: usize },

    #[error("acceleration matrix I - A^-1 B is singular")]
    SingularAcceleration,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, SurroError>;
