use thiserror::Error;

/// Failures raised while evaluating geometric quantities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("domain violation in `{primitive}`")]
    Domain { primitive: &'static str },
    #[error("matrix is singular (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("matrix is not positive definite (leading minor {minor} = {value:.3e})")]
    NotPositiveDefinite { minor: usize, value: f64 },
    #[error("tangent vector must be nonzero")]
    ZeroDirection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("rank deficient sample set: {0}")]
    Rank(String),
    #[error("navigation data outside its domain: lambda = {lambda:.3e}")]
    NavigationDomain { lambda: f64 },
    #[error("Randers data outside its domain: b^2 = {b2:.3e}")]
    RandersDomain { b2: f64 },
    #[error("Finsler function must be positive, got F = {value:.3e}")]
    NonPositive { value: f64 },
    #[error("fixture construction failed: {0}")]
    Fixture(String),
    #[error("at x = {x:?}, y = {y:?}: {source}")]
    AtFlag { x: Vec<f64>, y: Vec<f64>, source: Box<GeometryError> },
}

impl GeometryError {
    pub fn at(self, x: &[f64], y: &[f64]) -> Self {
        match self {
            e @ GeometryError::AtFlag { .. } => e,
            e => GeometryError::AtFlag { x: x.to_vec(), y: y.to_vec(), source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, GeometryError>;
