use thiserror::Error;

/// Errors produced by mesh construction, assembly and the spectral estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("unknown domain name `{0}`")]
    UnknownDomain(String),

    #[error("invalid domain parameters: {0}")]
    InvalidDomain(String),

    #[error("cell {cell} has non-positive signed volume {volume:.3e}")]
    Orientation { cell: usize, volume: f64 },

    #[error("cell {cell} is degenerate (volume {volume:.3e})")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("cell {cell} is invalid: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("boundary facet {facet} is invalid: {reason}")]
    InvalidFacet { facet: usize, reason: String },

    #[error("boundary facet {facet} has no label")]
    UnlabeledFacet { facet: usize },

    #[error("mesh file schema violation: {0}")]
    Schema(String),

    #[error("analytic boundary descriptor required but absent")]
    MissingDescriptor,

    #[error("tolerance must be positive, got {0:.3e}")]
    NonPositiveTolerance(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rigid motion has no rotation axis (zero angular part)")]
    NoAxis,

    #[error("matrix B of the pencil is not positive definite")]
    NotPositiveDefinite,

    #[error("reduced denominator matrix is numerically singular (missing deflation)")]
    SingularDenominator,

    #[error("constrained space is empty")]
    EmptyConstrainedSpace,

    #[error("problem size {size} exceeds limit {limit}")]
    SizeExceeded { size: usize, limit: usize },

    #[error("eigensolver did not reach the residual tolerance ({residual:.3e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("vector field evaluation produced a non-finite value")]
    NonFiniteField,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
