use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },

    #[error("invalid hyperparameter {name} = {value}: {reason}")]
    InvalidHyper {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("swarm must contain at least one particle")]
    EmptySwarm,

    #[error("degenerate bounds in dimension {dim}: [{lo}, {hi}]")]
    DegenerateBounds { dim: usize, lo: f64, hi: f64 },

    #[error("objective returned a non-finite value")]
    NonFiniteObjective,
}

pub type Result<T> = std::result::Result<T, Error>;
