use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported order {0}; expected one of 2, 4, 6, 8, 10")]
    UnsupportedOrder(usize),
    #[error("grid too small: n = {n}, operator needs at least {min} points")]
    GridTooSmall { n: usize, min: usize },
    #[error("coefficient validation failed: {check} (residual {residual:.3e})")]
    CoefficientValidationFailed { check: String, residual: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("constraint system infeasible: residual {residual:.3e}, rank defect {rank_defect}")]
    ConstraintSystemInfeasible { residual: f64, rank_defect: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("norm compatibility violated (residual {0:.3e})")]
    CompatibilityViolation(f64),
    #[error("symmetry violated (residual {0:.3e})")]
    SymmetryViolation(f64),
    #[error("trace endpoints differ: {0}")]
    EndpointMismatch(String),
    #[error("parameter {name} = {value} outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("penalty {tau:.6e} below stability bound {bound:.6e}")]
    PenaltyBelowBound { tau: f64, bound: f64 },
    #[error("interface segment without glue coverage: {0}")]
    CoverageGap(String),
    #[error("non-positive input: {0}")]
    NonpositiveInput(String),
    #[error("system with {n} unknowns exceeds the dense eigensolve limit {max}")]
    SystemTooLarge { n: usize, max: usize },
    #[error("need at least two refinement levels, got {0}")]
    InsufficientLevels(usize),
    #[error("blow-up detected at t = {t:.6}: max |z| = {max_abs:.3e}")]
    BlowupDetected { t: f64, max_abs: f64 },
    #[error("linear algebra backend failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
