//! Config-driven benchmark harness: parse an experiment file, run every
//! algorithm over seeded replicates, and write per-step and summary results.

pub mod config;
pub mod error;
pub mod run;
pub mod summary;

pub use config::{
    parse_config, parse_config_str, ArmConfig, DynamicsConfig, ExperimentConfig, FamilyConfig,
    TruthConfig,
};
pub use error::{BenchError, Result};
pub use run::{run, run_to_dir, write_results, RunSummary, CURVES_FILE, STEPS_FILE, SUMMARY_FILE};
pub use summary::{format_summary, growth_ratio, summarize, summarize_runs, AlgorithmSummary};

/// Worker count from `ROGUE_WORKERS`, falling back to the available parallelism.
pub const WORKERS_ENV: &str = "ROGUE_WORKERS";
