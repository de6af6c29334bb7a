use thiserror::Error;

pub type Result<T> = std::result::Result<T, FinslerError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("singular point ({reason}) at x={x:?}, y={y:?}")]
    SingularPoint {
        reason: String,
        x: Vec<f64>,
        y: Vec<f64>,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate fundamental tensor: |det g| = {det:e} below {threshold:e}")]
    DegenerateMetric { det: f64, threshold: f64 },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("energy drift {drift:e} exceeds tolerance {tol:e}")]
    EnergyDriftExceeded { drift: f64, tol: f64 },
    #[error("step size underflow at s={s} (h={h:e})")]
    StepFailure { s: f64, h: f64 },
    #[error("curve is not a geodesic: residual {residual:e} transverse to velocity")]
    NotAGeodesic { residual: f64 },
    #[error("curve is not timelike at r={at}")]
    NotTimelike { at: f64 },
    #[error("curve endpoint does not meet the observer (distance {distance:e})")]
    NoIntersection { distance: f64 },
    #[error("observer parameters {t1} and {t2} both match the endpoint")]
    AmbiguousIntersection { t1: f64, t2: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("trajectory left the regular domain at s={s}")]
    LeftRegularDomain { s: f64 },
    #[error("vector is not future pointed (g(y,T) = {pairing:e})")]
    NotFuturePointed { pairing: f64 },
    #[error("L = {l:e} cannot be rescaled onto the shell L = -{c}^2")]
    WrongShell { l: f64, c: f64 },
    #[error("variation construction failed: {0}")]
    VariationConstructionFailed(String),
    #[error("boundary pairing g(gamma', lambda'(1)) = {pairing:e} is degenerate")]
    DegenerateBoundaryPairing { pairing: f64 },
    #[error("endpoint is conjugate to the source (s* = {s})")]
    EndpointConjugate { s: f64 },
    #[error("parse error at line {line}, column {column}: {msg}")]
    ParseError {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("bad parameter '{name}': {msg}")]
    BadParameter { name: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl FinslerError {
    pub fn singular(reason: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        FinslerError::SingularPoint {
            reason: reason.into(),
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    pub fn bad_param(name: impl Into<String>, msg: impl Into<String>) -> Self {
        FinslerError::BadParameter {
            name: name.into(),
            msg: msg.into(),
        }
    }

    /// Short machine-friendly tag, used in run reports.
    pub fn kind(&self) -> &'static str {
        match self {
            FinslerError::SingularPoint { .. } => "SingularPoint",
            FinslerError::DimensionMismatch { .. } => "DimensionMismatch",
            FinslerError::DegenerateMetric { .. } => "DegenerateMetric",
            FinslerError::NumericalBreakdown(_) => "NumericalBreakdown",
            FinslerError::EnergyDriftExceeded { .. } => "EnergyDriftExceeded",
            FinslerError::StepFailure { .. } => "StepFailure",
            FinslerError::NotAGeodesic { .. } => "NotAGeodesic",
            FinslerError::NotTimelike { .. } => "NotTimelike",
            FinslerError::NoIntersection { .. } => "NoIntersection",
            FinslerError::AmbiguousIntersection { .. } => "AmbiguousIntersection",
            FinslerError::NoConvergence { .. } => "NoConvergence",
            FinslerError::LeftRegularDomain { .. } => "LeftRegularDomain",
            FinslerError::NotFuturePointed { .. } => "NotFuturePointed",
            FinslerError::WrongShell { .. } => "WrongShell",
            FinslerError::VariationConstructionFailed(_) => "VariationConstructionFailed",
            FinslerError::DegenerateBoundaryPairing { .. } => "DegenerateBoundaryPairing",
            FinslerError::EndpointConjugate { .. } => "EndpointConjugate",
            FinslerError::ParseError { .. } => "ParseError",
            FinslerError::UnknownModel(_) => "UnknownModel",
            FinslerError::BadParameter { .. } => "BadParameter",
            FinslerError::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for FinslerError {
    fn from(e: std::io::Error) -> Self {
        FinslerError::Io(e.to_string())
    }
}
