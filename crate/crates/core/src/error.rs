use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KornError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("patch geometry rejected: {0}")]
    Geometry(String),

    #[error("degenerate shift factor 1 + t*kappa = {value:.3e} at t = {t}")]
    DegenerateShift { t: f64, value: f64 },

    #[error("quadrature under-resolved: relative change {change:.3e} after refinement exceeds {tolerance:.1e}")]
    QuadratureUnderresolved { change: f64, tolerance: f64 },

    #[error("non-finite integrand value at (t, theta, z) = ({t}, {theta}, {z})")]
    NonFinite { t: f64, theta: f64, z: f64 },

    #[error("field violates the thin-edge Dirichlet condition: |u| = {magnitude:.3e} at (theta, z) = ({theta}, {z})")]
    BoundaryViolation { theta: f64, z: f64, magnitude: f64 },

    #[error("patch curvature class {found} does not match required {required}")]
    WrongCurvatureClass { required: &'static str, found: String },

    #[error("harmonic sample rejected: Laplacian residual {0:.3e}")]
    NotHarmonic(f64),

    #[error("transport phase undefined: {reason} (theta = {theta})")]
    Transport { theta: f64, reason: String },

    #[error("Case-1 factorization A_z/A_theta = H(theta)/G(z) not available for this profile")]
    NoFactorization,

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("basis under-resolved: {0}")]
    Unresolved(String),

    #[error("projection residual {residual:.3} exceeds 10% in H1; basis cannot represent the field")]
    ProjectionResidual { residual: f64 },

    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("embedding required: {0}")]
    MissingEmbedding(String),
}

pub type Result<T> = std::result::Result<T, KornError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> KornError {
    KornError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
