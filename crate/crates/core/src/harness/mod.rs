//! Experiment orchestration: configuration, seeded Monte Carlo campaigns,
//! lambda and threshold sweeps, and CSV/JSON emission.

mod config;
mod experiment;
mod output;

pub use config::{parse_config, parse_config_str, ExperimentConfig, MethodSpec, SCHEMA_VERSION};
pub use experiment::{
    run_experiment, run_trial, sweep_lambda, Experiment, ExperimentOutput, MethodInstance, MethodOutcome,
    TrialResult,
};
pub use output::{emit_results, write_trial_dump, Manifest, RmsdRow, RocRow, Tables};
