use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("non-finite position or time")]
    NonFinite,
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
    #[error("stream function log argument is not positive: {0}")]
    LogDomain(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("right-hand side failed at t = {t}: {reason}")]
    Rhs { t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrainError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is numerically rank deficient (sigma_1 / sigma_3 = {0:e})")]
    RankDeficient(f64),
    #[error("singular values are not strictly ascending and positive")]
    Unordered,
    #[error("normal vector is not unit length (|n| = {0})")]
    NonUnitNormal(f64),
    #[error("zero time horizon")]
    ZeroHorizon,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("deformation gradient is not orientation preserving (det = {0:e})")]
    NotOrientationPreserving(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectionError {
    #[error("degenerate singular values at ({x}, {y}, {z}): gap {gap:e}")]
    DegenerateGap { x: f64, y: f64, z: f64, gap: f64 },
    #[error(transparent)]
    Flow(#[from] IntegrationError),
    #[error(transparent)]
    Strain(#[from] StrainError),
    #[error("reference direction is not a unit vector")]
    NonUnitReference,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("flow integration failed: {0}")]
    Flow(#[from] IntegrationError),
    #[error(transparent)]
    Strain(#[from] StrainError),
    #[error("line terminated early ({reason}) at arclength {s}")]
    LineTerminated { reason: String, s: f64 },
    #[error("points do not wind around the center curve (accumulated angle {0:.3} rad)")]
    InsufficientWinding(f64),
    #[error("{empty} of {total} torus bins are empty")]
    SparseBins { empty: usize, total: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("override `{0}` is not of the form KEY=VALUE")]
    BadOverride(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Flow(#[from] IntegrationError),
    #[error("{0}")]
    Pipeline(String),
}
