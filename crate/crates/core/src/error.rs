use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("argument {z} outside the supported range |z| <= {max}")]
    ArgumentRange { z: f64, max: f64 },

    #[error("mesh too coarse: n = {n}, need at least {min} nodes")]
    Resolution { n: usize, min: usize },

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("grid functions live on different meshes")]
    MeshMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis {condition} failed: {detail}")]
    Hypothesis { condition: String, detail: String },

    #[error("expression error: {0}")]
    Expression(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn hypothesis(condition: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Hypothesis {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}
