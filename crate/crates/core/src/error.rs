use thiserror::Error;

/// Errors produced by mesh construction, solvers, and checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate face {face}: area {area:e}")]
    DegenerateFace { face: usize, area: f64 },

    #[error("induced vertex subset contains no complete face")]
    EmptyDomain,

    #[error("domain has no interior vertex")]
    UnderResolvedDomain,

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("field is identically zero")]
    DegenerateField,

    #[error("nodal set is empty")]
    EmptyNodalSet,

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("abscissa {0} lies outside the profile grid")]
    GridRange(f64),

    #[error("eigenvalue {lambda} is below the guard {guard}")]
    BelowGuard { lambda: f64, guard: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
