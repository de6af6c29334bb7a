//! Scenario files: loading, orchestrated runs and report emission.

pub mod config;
pub mod emit;
pub mod run;

pub use config::{load_config, parse_config, Analysis, ScenarioConfig};
pub use emit::{emit, write_timing, Format};
pub use run::{run, AnalysisOutcome, RunArtifacts, RunReport};
