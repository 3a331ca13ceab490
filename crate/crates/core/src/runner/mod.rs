//! Batch experiment runner: JSON configuration, scenario construction,
//! parallel evaluation and reproducible CSV/markdown artifacts.

mod config;
mod output;
mod run;
mod sampling;

pub use config::{
    load_config, locate, parse_config, validate_config, AdditivitySpec, CoefficientSpec, ConcentrationSpec, ConfigIssue,
    EnvelopeSpec, ExperimentConfig, MeshSpec, PathSeg, RegionSpec, SampledAuditSpec, ScanMember, ScanSpec, ScenarioSpec,
};
pub use run::{
    execute, resolve_output_dir, run_experiment, AdditivityOutcome, EnvelopeOutcome, RunArtifacts, RunOptions, RunOutcome,
    ScanOutcome, Timing, TrapSplit,
};
pub use sampling::{sample_boxes, sampled_additivity, BoxSample, SampledCheck};

/// Text printed by `list-scenarios`.
pub fn list_scenarios() -> String {
    crate::scenarios::catalog_text()
}
