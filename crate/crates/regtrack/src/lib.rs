//! File formats, reports and the command-line front end for `regtrack-core`.

pub mod ablation;
pub mod cli;
pub mod config;
pub mod error;
pub mod kitti;
pub mod plot;
pub mod report;
pub mod run;
pub mod scenario_file;

pub use error::{Error, Result};
