use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is off the hyperboloid: <x,x> + 1 = {0:e}")]
    OffHyperboloid(f64),
    #[error("point lies on the lower sheet")]
    LowerSheet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("rotation is not orthogonal (defect {0:e})")]
    NotOrthogonal(f64),
    #[error("rotation has negative determinant")]
    NotOrientationPreserving,
    #[error("translation length {0:e} is degenerate")]
    DegenerateTranslation(f64),
    #[error("radius {0} is out of range")]
    RadiusOutOfRange(f64),
    #[error("comparison radius {0} is below the admissible threshold 2")]
    ComparisonRadiusTooSmall(f64),
    #[error("thin part is empty: half translation length {half_ell} >= mu {mu}")]
    EmptyThinPart { half_ell: f64, mu: f64 },
    #[error("search radius ratio r/ell = {0:e} exceeds the enumeration limit")]
    EnumerationTooLarge(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("field support touches the grid boundary")]
    SupportTouchesBoundary,
    #[error("metric is degenerate at r = {r}, t = {t}")]
    DegenerateMetric { r: f64, t: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("Jacobian condition number {0:e} exceeds the limit")]
    IllConditioned(f64),
    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("ball of radius {radius} is not embedded at injectivity radius {inj}")]
    NotEmbedded { radius: f64, inj: f64 },
    #[error("weight exponent {beta} outside the admissible window ({lo}, {hi})")]
    WeightOutOfWindow { beta: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
