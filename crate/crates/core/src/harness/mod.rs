//! Experiment orchestration behind the `hardyfrac` CLI.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{unit_bump, ExperimentConfig, ExperimentKind};
pub use experiments::*;
pub use output::{Artifacts, RunManifest, SCHEMA_VERSION};
