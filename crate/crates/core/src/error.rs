use thiserror::Error;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("point {point:?} lies outside the chart domain")]
    PointOutsideDomain { point: Vec<f64> },

    #[error("metric is not symmetric positive definite at {point:?}")]
    MetricNotSpd { point: Vec<f64> },

    #[error("analytic derivatives requested but not provided by the evaluator")]
    DerivativeUnavailable,

    #[error("degenerate plane: |u ^ v|^2 = {wedge:e} is below the threshold")]
    DegeneratePlane { wedge: f64 },

    #[error("vector is not unit length (|u| = {norm})")]
    NonUnitVector { norm: f64 },

    #[error("t = {t} lies outside the interval ({lo}, {hi})")]
    OutsideInterval { t: f64, lo: f64, hi: f64 },

    #[error("graph value f({point:?}) = {value} lies outside the interval")]
    ValueOutsideInterval { point: Vec<f64>, value: f64 },

    #[error("adaptive quadrature exceeded its budget of {budget} evaluations")]
    QuadratureNonConvergent { budget: usize },

    #[error("integral classification is inconclusive toward the {side} endpoint")]
    Inconclusive { side: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {m} is too small (need at least {need})")]
    DimensionTooSmall { m: usize, need: usize },

    #[error("Cholesky factorisation failed (matrix not positive definite)")]
    CholeskyFailure,

    #[error("chart ball of radius {radius} around {center:?} leaves the chart domain")]
    RadiusExceedsChart { center: Vec<f64>, radius: f64 },

    #[error("region is invalid: {0}")]
    InvalidRegion(String),

    #[error("evaluation failed at {point:?}: {message}")]
    EvaluationFailure { point: Vec<f64>, message: String },

    #[error("parse error at {position}: {message}")]
    Parse { message: String, position: usize },

    #[error("unknown model '{0}'")]
    UnknownModel(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
