//! Configured experiment runs and their on-disk artifacts.

pub mod config;
pub mod manifest;
pub mod report;
pub mod run;

pub use config::{parse_config, Kind, Overrides, ScenarioConfig};
pub use manifest::RunManifest;
pub use report::{Cell, Report};
pub use run::{compute, run_scenario, Outcome};
