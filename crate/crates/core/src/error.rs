use alloc::string::String;

use crate::geometry::FrameId;

/// Errors produced by the tracking core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(&'static str),
    #[error("coordinate frame mismatch: {left:?} vs {right:?}")]
    FrameMismatch { left: FrameId, right: FrameId },
    #[error("innovation covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("value out of range for {name}: {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("frame {got} out of order, expected {expected}")]
    FrameOrder { expected: u32, got: u32 },
    #[error("oracle failed at frame {frame}: {reason}")]
    Oracle { frame: u32, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = core::result::Result<T, Error>;
