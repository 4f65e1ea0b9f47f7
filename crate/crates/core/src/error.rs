use thiserror::Error;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("mask selects no pixels")]
    EmptyRegion,
    #[error("need at least {required} points, got {actual}")]
    InsufficientPoints { required: usize, actual: usize },
    #[error("degenerate point configuration: {0}")]
    Degenerate(String),
    #[error("no model reached {required} inliers (best had {best})")]
    NoConsensus { required: usize, best: usize },
    #[error("invalid symmetry annotation: {0}")]
    InvalidAnnotation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {required} samples, got {actual}")]
    InsufficientSamples { required: usize, actual: usize },
    #[error("records span several categories: {0}")]
    MixedCategories(String),
    #[error("object is not visible from the camera")]
    EmptyRender,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
