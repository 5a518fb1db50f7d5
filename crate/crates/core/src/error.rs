use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("grid dimensions must be at least 1x1, got {height}x{width}")]
    EmptyDimensions { height: usize, width: usize },
    #[error("sample buffer holds {actual} values, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(usize),
    #[error("shape mismatch: {left_height}x{left_width} vs {right_height}x{right_width}")]
    ShapeMismatch {
        left_height: usize,
        left_width: usize,
        right_height: usize,
        right_width: usize,
    },
    #[error("input is empty")]
    EmptyInput,
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("negative sample at index {0}")]
    NegativeSample(usize),
    #[error("image percentile is zero, tone-map scale is undefined")]
    DegenerateImage,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("need at least {needed} samples, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("mask covers {found} usable pixels, need at least {needed}")]
    InsufficientMask { needed: usize, found: usize },
    #[error("evaluation region has no pixels with positive ground truth")]
    EmptyRegion,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("codec failure: {0}")]
    Codec(String),
}
