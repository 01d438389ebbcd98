//! Experiment runner: configuration, seeding, run directories and the
//! hedging demo.

mod config;
mod hedge;
mod output;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, FunctionalSpec, Steps, ThetaSpec, CONFIG_SCHEMA_VERSION};
pub use hedge::hedge_demo;
pub use output::write_run_dir;
pub use run::{
    effective_config, execute, run_experiment, with_threads, Artifacts, RunOptions, RunOutcome, SEED_ENV,
    THREADS_ENV,
};
