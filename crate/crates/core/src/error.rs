use thiserror::Error;

pub type Result<T, E = QsnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QsnError {
    /// Malformed input: qubit index, parameter count, graph structure, etc.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric precondition failed (unitarity, normalisation, Hermiticity).
    #[error("numeric validation failed: {0}")]
    Numeric(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The probe carries (almost) no information, so `1/Q` is unbounded.
    #[error("degenerate probe: Fisher information {info:e} below floor {floor:e}")]
    DegenerateProbe { info: f64, floor: f64 },

    #[error("optimisation failed: {0}")]
    OptimizationFailure(String),

    #[error("posterior vanished: outcome {outcome} has zero likelihood on the whole grid")]
    DegenerateLikelihood { outcome: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QsnError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Self::Numeric(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }
}
