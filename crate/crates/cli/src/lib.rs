//! Config-driven runner for the wave-maps solver and the estimate checks.
//!
//! A run reads a [`config::RunConfig`], validates it completely before touching
//! the disk, writes its reports and finishes with a manifest listing them.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use report::{emit_report, Format};
pub use run::{run, RunManifest};
