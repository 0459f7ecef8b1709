use thiserror::Error;

/// Errors raised by the qudit layer, the protocol and the attack analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbcError {
    #[error("invalid dimension {0}: qudit dimension must be at least 2")]
    InvalidDimension(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("partial trace needs at least one kept factor")]
    EmptyKeepSet,

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("channel is not trace preserving (max deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("vector family is not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("exact permutation averaging is limited to d <= 5 (got d = {0}); use sampled mode")]
    ExactAveragingTooLarge(usize),

    #[error("{requested} Schmidt terms requested but the cut only supports {max}")]
    TooManyTerms { requested: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QbcError>;
