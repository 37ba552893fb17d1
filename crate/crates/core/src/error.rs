use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    #[error("degenerate input for {mapping}: {reason}")]
    DegenerateInput {
        mapping: &'static str,
        reason: String,
    },

    #[error("closed-form derivative is near singular (denominator {denominator:e})")]
    NearSingularDerivative { denominator: f64 },

    #[error("rotation angle {angle} is outside the mapping range (< {max_angle})")]
    OutOfRange { angle: f64, max_angle: f64 },

    #[error("pre-image pairs are not supported for {0}")]
    Unsupported(&'static str),

    #[error("{0} is injective: every rotation has a single pre-image")]
    InjectiveMapping(&'static str),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("point set has zero diameter")]
    ZeroDiameter,

    #[error("invalid loss specification: {0}")]
    InvalidLoss(String),

    #[error("network parameters became non-finite at step {step}")]
    NonFiniteParameters { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
