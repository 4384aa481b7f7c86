use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{context}: window {window} does not fit input {height}x{width}")]
    WindowTooLarge {
        context: &'static str,
        window: usize,
        height: usize,
        width: usize,
    },

    #[error("dropout rate {0} outside [0, 1)")]
    InvalidDropoutRate(f64),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("loss is not finite")]
    NonFiniteLoss,
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn mismatch<A: std::fmt::Debug, B: std::fmt::Debug>(
    context: &'static str,
    expected: A,
    found: B,
) -> NnError {
    NnError::ShapeMismatch {
        context,
        expected: format!("{expected:?}"),
        found: format!("{found:?}"),
    }
}
