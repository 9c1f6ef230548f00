//! Final-regret statistics and growth ratios from a results directory.

use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use rogue_core::simulator::mean_stderr;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::run::STEPS_FILE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub replicates: usize,
    pub horizon: usize,
    pub final_regret_mean: f64,
    pub final_regret_stderr: f64,
    pub final_avg_reward_mean: f64,
    pub final_avg_reward_stderr: f64,
    /// `regret(T) / regret(T / 2)` of the mean regret curve.
    pub growth_ratio: Option<f64>,
}

/// `curve[T] / curve[floor(T / 2)]` with 1-indexed steps; `None` when `T < 2`.
pub fn growth_ratio(curve: &[f64]) -> Option<f64> {
    let t = curve.len();
    (t >= 2).then(|| curve[t - 1] / curve[t / 2 - 1])
}

/// Summary of one algorithm from its per-replicate regret curves and final average rewards.
pub fn summarize_runs(
    algorithm: &str,
    regrets: &[Vec<f64>],
    final_avg_rewards: &[f64],
) -> Result<AlgorithmSummary> {
    let horizon = regrets.first().map_or(0, Vec::len);
    if horizon == 0 || regrets.iter().any(|r| r.len() != horizon) {
        return Err(BenchError::Data(format!(
            "{algorithm}: replicates have missing or unequal step counts"
        )));
    }
    let reps = regrets.len() as f64;
    let mean_curve: Vec<f64> = (0..horizon)
        .map(|t| regrets.iter().map(|r| r[t]).sum::<f64>() / reps)
        .collect();
    let finals: Vec<f64> = regrets.iter().map(|r| r[horizon - 1]).collect();
    let (final_regret_mean, final_regret_stderr) = mean_stderr(&finals);
    let (final_avg_reward_mean, final_avg_reward_stderr) = mean_stderr(final_avg_rewards);
    Ok(AlgorithmSummary {
        algorithm: algorithm.to_string(),
        replicates: regrets.len(),
        horizon,
        final_regret_mean,
        final_regret_stderr,
        final_avg_reward_mean,
        final_avg_reward_stderr,
        growth_ratio: growth_ratio(&mean_curve),
    })
}

#[derive(Debug, Deserialize)]
struct StepIn {
    algorithm: String,
    replicate: usize,
    t: usize,
    cumulative_regret: f64,
    avg_reward: f64,
}

struct Replicate {
    id: usize,
    regret: Vec<f64>,
    final_avg_reward: f64,
}

/// Reads `steps.csv` in `dir` and summarizes each algorithm in order of appearance.
pub fn summarize(dir: &Path) -> Result<Vec<AlgorithmSummary>> {
    let path = dir.join(STEPS_FILE);
    let file = File::open(&path).map_err(|source| BenchError::Io {
        path: path.clone(),
        source,
    })?;
    let mut groups: Vec<(String, Vec<Replicate>)> = Vec::new();
    for row in csv::Reader::from_reader(file).deserialize() {
        let row: StepIn = row?;
        let gi = match groups.iter().position(|(a, _)| *a == row.algorithm) {
            Some(i) => i,
            None => {
                groups.push((row.algorithm.clone(), Vec::new()));
                groups.len() - 1
            }
        };
        let reps = &mut groups[gi].1;
        let ri = match reps.iter().position(|r| r.id == row.replicate) {
            Some(i) => i,
            None => {
                reps.push(Replicate {
                    id: row.replicate,
                    regret: Vec::new(),
                    final_avg_reward: f64::NAN,
                });
                reps.len() - 1
            }
        };
        let rep = &mut reps[ri];
        if row.t != rep.regret.len() + 1 {
            return Err(BenchError::Data(format!(
                "{}: {} replicate {} jumps to t = {} after {} steps",
                path.display(),
                row.algorithm,
                row.replicate,
                row.t,
                rep.regret.len()
            )));
        }
        rep.regret.push(row.cumulative_regret);
        rep.final_avg_reward = row.avg_reward;
    }
    if groups.is_empty() {
        return Err(BenchError::Data(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    groups
        .iter()
        .map(|(alg, reps)| {
            let regrets: Vec<Vec<f64>> = reps.iter().map(|r| r.regret.clone()).collect();
            let finals: Vec<f64> = reps.iter().map(|r| r.final_avg_reward).collect();
            summarize_runs(alg, &regrets, &finals)
        })
        .collect()
}

/// Plain-text table, one line per algorithm.
pub fn format_summary(rows: &[AlgorithmSummary]) -> String {
    let mut out = format!(
        "{:<16} {:>5} {:>6} {:>24} {:>22} {:>10}\n",
        "algorithm", "reps", "T", "final regret", "final avg reward", "R(T)/R(T/2)"
    );
    for r in rows {
        let ratio = r
            .growth_ratio
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>6} {:>24} {:>22} {:>10}",
            r.algorithm,
            r.replicates,
            r.horizon,
            format!("{:.4} ± {:.4}", r.final_regret_mean, r.final_regret_stderr),
            format!(
                "{:.4} ± {:.4}",
                r.final_avg_reward_mean, r.final_avg_reward_stderr
            ),
            ratio
        );
    }
    out
}
