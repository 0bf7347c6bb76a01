//! Command-line pipeline around `srr-core`: configuration, stage artifacts
//! and reports.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{crisis_presets, preset, RunConfig};
pub use error::{CliError, CliResult};
pub use pipeline::{Run, Stage};
