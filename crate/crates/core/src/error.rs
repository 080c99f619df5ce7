use thiserror::Error;

/// Errors raised by the korn-lab toolkit.
#[derive(Debug, Error)]
pub enum KornError {
    #[error("thickness phi2 - phi1 must be positive everywhere (min = {min})")]
    NonPositiveThickness { min: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("boundary selector is empty")]
    EmptySelector,

    #[error("operator is not elliptic (smallest eigenvalue of the symmetric part = {lambda})")]
    NotElliptic { lambda: f64 },

    #[error("shear transform requires an operator without mixed terms (a[{i}][{j}] = {value})")]
    MixedTermsPresent { i: usize, j: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("periodic constraint requires periodic-compatible profiles: {0}")]
    PeriodicIncompatibleProfiles(String),

    #[error("cannot deflate constants of a component carrying Dirichlet constraints")]
    DeflationOnConstrainedComponent,

    #[error("unknown form descriptor: {0}")]
    UnknownDescriptor(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("bad interval: {0}")]
    BadInterval(String),

    #[error(
        "test function does not vanish on the complementary boundary (max trace {max_trace:e})"
    )]
    CutoffMissing { max_trace: f64 },

    #[error("boundary integral condition violated ({value:e} exceeds {threshold:e})")]
    BoundaryConditionViolated { value: f64, threshold: f64 },

    #[error("ratio undefined: {0}")]
    ZeroDenominator(String),

    #[error("power-law fit requires at least 3 strictly positive points: {0}")]
    NonPositiveInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KornError>;
