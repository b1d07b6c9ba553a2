use thiserror::Error;

/// Errors raised by the geometry kernel, the estimators and the IFS engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("a ball point needs at least one coordinate")]
    EmptyPoint,
    #[error("zero tangent vector")]
    ZeroTangent,
    #[error("boundary point must lie on the unit circle (|b| = {0})")]
    InvalidBoundaryPoint(f64),
    #[error("radius parameter must be positive and finite (got {0})")]
    NonPositiveRadius(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degenerate geodesic: the two points coincide numerically")]
    DegenerateGeodesic,
    #[error("base point lies outside the region")]
    OutsideRegion,
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("no member of the region was found among the samples")]
    EmptyRegion,
    #[error("containment violation: {0}")]
    ContainmentViolation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("map and point live on different domains")]
    DomainMismatch,
    #[error("not a unitary matrix (residual {0:e})")]
    NotUnitary(f64),
}

pub type Result<T, E = GeoError> = std::result::Result<T, E>;
