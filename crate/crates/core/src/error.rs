use thiserror::Error;

/// Errors raised by the library layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (asymmetry {asymmetry:e})")]
    NotSkew { asymmetry: f64 },

    #[error("rotation axis must be a unit vector, got norm {norm}")]
    NonUnitAxis { norm: f64 },

    #[error("point {point:?} lies outside the field domain (margin {margin:e})")]
    OutsideDomain { point: [f64; 3], margin: f64 },

    #[error("degenerate immersion at ({x1}, {x2}): |d1 y0 x d2 y0| = {cross_norm:e}")]
    DegenerateImmersion { x1: f64, x2: f64, cross_norm: f64 },

    #[error("thickness coordinate {x3} is outside the admissible range (det = {det:e})")]
    ThicknessRange { x3: f64, det: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("unbounded or degenerate objective: Hessian is not positive definite (pivot {pivot:e})")]
    DegenerateObjective { pivot: f64 },

    #[error("search box too small: minimizer on the box boundary after refinement")]
    BoxTooSmall,

    #[error("quadrature under-resolved: refined rule differs by {difference:e} (tolerance {tolerance:e})")]
    Resolution { difference: f64, tolerance: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
