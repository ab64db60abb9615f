//! Detector-regression multi-object 3D tracking.
//!
//! Tracks are re-scored every frame by a two-stage detector stand-in (an
//! [`oracle`]), their regression confidences are fused over time and across
//! the camera and LiDAR branches ([`fusion`]), and a confidence-ordered joint
//! NMS over trajectories and fresh detections ([`association`]) replaces the
//! usual data-association step.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the clock live in the companion `regtrack` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod assignment;
pub mod association;
pub mod config;
mod error;
pub mod fusion;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod motion;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod sequence;
pub mod simworld;
pub mod trackman;

pub use error::{Error, Result};
