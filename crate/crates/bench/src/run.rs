//! Running a config and writing `steps.csv`, `curves.csv` and `summary.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rogue_core::simulator::{run_experiment, ExperimentResult, OracleMode};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::summary::{summarize_runs, AlgorithmSummary};

pub const STEPS_FILE: &str = "steps.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub oracle: OracleMode,
    pub oracle_note: String,
    pub horizon: usize,
    pub replicates: usize,
    /// Replicate seeds; policy `i` draws from stream `1 + i` of the same seed.
    pub seeds: Vec<u64>,
    pub algorithms: Vec<AlgorithmSummary>,
    pub config: ExperimentConfig,
}

fn oracle_note(mode: OracleMode) -> String {
    match mode {
        OracleMode::Greedy => "benchmark pulls the arm with the highest current expected reward at every step; \
                               this is not guaranteed to maximize total expected reward, so regret can be negative"
            .into(),
        OracleMode::ExactDp => "benchmark is the action sequence maximizing total expected reward over the horizon".into(),
    }
}

#[derive(Serialize)]
struct StepRow<'a> {
    algorithm: &'a str,
    replicate: usize,
    t: usize,
    action: usize,
    reward: f64,
    expected_reward: f64,
    oracle_expected_reward: f64,
    cumulative_regret: f64,
    avg_reward: f64,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    algorithm: &'a str,
    t: usize,
    mean_regret: f64,
    stderr_regret: f64,
    mean_avg_reward: f64,
    stderr_avg_reward: f64,
}

/// Runs every algorithm and replicate of `config` in memory.
pub fn run(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<(ExperimentResult<f64>, RunSummary)> {
    config.validate()?;
    let spec = config.to_spec()?;
    let result = run_experiment(&spec, workers.max(1))?;
    let algorithms = config
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, alg)| {
            let eps = &result.episodes[a * config.replicates..(a + 1) * config.replicates];
            let regrets: Vec<Vec<f64>> = eps
                .iter()
                .map(|e| e.records.iter().map(|r| r.cumulative_regret).collect())
                .collect();
            let finals: Vec<f64> = eps.iter().map(|e| e.final_avg_reward()).collect();
            summarize_runs(alg.label(), &regrets, &finals)
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = RunSummary {
        oracle: config.oracle,
        oracle_note: oracle_note(config.oracle),
        horizon: config.horizon,
        replicates: config.replicates,
        seeds: config.replicate_seeds(),
        algorithms,
        config: config.clone(),
    };
    Ok((result, summary))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

/// Writes the three result files into `out_dir`, creating it if needed.
pub fn write_results(
    result: &ExperimentResult<f64>,
    summary: &RunSummary,
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let path = out_dir.join(STEPS_FILE);
    let mut w = csv_writer(&path)?;
    for ep in &result.episodes {
        for r in &ep.records {
            w.serialize(StepRow {
                algorithm: &ep.algorithm,
                replicate: ep.replicate,
                t: r.t,
                action: r.action,
                reward: r.reward,
                expected_reward: r.expected_reward,
                oracle_expected_reward: r.oracle_expected_reward,
                cumulative_regret: r.cumulative_regret,
                avg_reward: r.avg_reward,
            })?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let path = out_dir.join(CURVES_FILE);
    let mut w = csv_writer(&path)?;
    for c in &result.curves {
        for t in 0..c.mean_regret.len() {
            w.serialize(CurveRow {
                algorithm: &c.algorithm,
                t: t + 1,
                mean_regret: c.mean_regret[t],
                stderr_regret: c.stderr_regret[t],
                mean_avg_reward: c.mean_avg_reward[t],
                stderr_avg_reward: c.stderr_avg_reward[t],
            })?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let path = out_dir.join(SUMMARY_FILE);
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    let mut f = File::create(&path).map_err(io_err(&path))?;
    f.write_all(json.as_bytes()).map_err(io_err(&path))?;
    Ok(())
}

/// Runs `config` and writes its results into `out_dir`.
pub fn run_to_dir(config: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<RunSummary> {
    let (result, summary) = run(config, workers)?;
    write_results(&result, &summary, out_dir)?;
    Ok(summary)
}
