//! Experiment configuration files.
//!
//! A config is one JSON document. Each arm parameter has its
//! own key: `dynamics.{a, b, k}`, `family.{alpha, beta}` and `truth.{theta, x0}`.

use std::fs;
use std::path::{Path, PathBuf};

use rogue_core::dynamics::{DynamicsParams, Interval};
use rogue_core::estimation::{ConfidenceConfig, SearchConfig};
use rogue_core::policies::{AlgorithmConfig, ArmStructure};
use rogue_core::reward_models::agent::DEFAULT_THETA_FLOOR;
use rogue_core::reward_models::{
    EstimateOrTruth, LaplaceAgentParams, LogisticGlmParams, RewardFamily,
};
use rogue_core::simulator::{ArmSpec, ExperimentSpec, OracleMode};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

fn unit_box() -> [f64; 2] {
    [0.0, 1.0]
}

fn agent_box() -> [f64; 2] {
    [DEFAULT_THETA_FLOOR, 1.0]
}

/// Scalar projected-linear dynamics `x' = clamp(a x + b u + k, state_box)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    #[serde(default = "unit_box")]
    pub state_box: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    LogisticGlm {
        alpha: f64,
        beta: f64,
        #[serde(default = "unit_box")]
        theta_box: [f64; 2],
    },
    LaplaceAgent {
        #[serde(default = "agent_box")]
        theta_box: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    pub theta: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dynamics: DynamicsConfig,
    pub family: FamilyConfig,
    pub truth: TruthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub arms: Vec<ArmConfig>,
    pub algorithms: Vec<AlgorithmConfig>,
    #[serde(default)]
    pub confidence: ConfidenceConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn check_finite(key: String, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(BenchError::Config(format!("{key} must be finite, got {v}")))
    }
}

fn check_box(key: String, b: [f64; 2]) -> Result<()> {
    if b[0].is_finite() && b[1].is_finite() && b[0] <= b[1] {
        Ok(())
    } else {
        Err(BenchError::Config(format!(
            "{key} must be a finite interval [lo, hi] with lo <= hi, got {b:?}"
        )))
    }
}

fn check_inside(key: String, v: f64, b: [f64; 2], box_key: &str) -> Result<()> {
    if v >= b[0] && v <= b[1] {
        Ok(())
    } else {
        Err(BenchError::Config(format!(
            "{key} = {v} lies outside {box_key} [{}, {}]",
            b[0], b[1]
        )))
    }
}

impl ArmConfig {
    fn validate(&self, i: usize) -> Result<()> {
        let p = format!("arms[{i}]");
        let d = &self.dynamics;
        check_finite(format!("{p}.dynamics.a"), d.a)?;
        check_finite(format!("{p}.dynamics.b"), d.b)?;
        check_finite(format!("{p}.dynamics.k"), d.k)?;
        check_box(format!("{p}.dynamics.state_box"), d.state_box)?;
        let theta_box = match self.family {
            FamilyConfig::LogisticGlm {
                alpha,
                beta,
                theta_box,
            } => {
                check_finite(format!("{p}.family.alpha"), alpha)?;
                check_finite(format!("{p}.family.beta"), beta)?;
                theta_box
            }
            FamilyConfig::LaplaceAgent { theta_box } => {
                if !(theta_box[0] > 0.0) {
                    return Err(BenchError::Config(format!(
                        "{p}.family.theta_box lower end must be positive for laplace_agent, got {}",
                        theta_box[0]
                    )));
                }
                theta_box
            }
        };
        check_box(format!("{p}.family.theta_box"), theta_box)?;
        check_inside(
            format!("{p}.truth.x0"),
            self.truth.x0,
            d.state_box,
            "state_box",
        )?;
        check_inside(
            format!("{p}.truth.theta"),
            self.truth.theta,
            theta_box,
            "theta_box",
        )
    }

    fn family(&self) -> rogue_core::Result<RewardFamily<f64>> {
        Ok(match self.family {
            FamilyConfig::LogisticGlm {
                alpha,
                beta,
                theta_box,
            } => RewardFamily::LogisticGlm(LogisticGlmParams::new(
                alpha,
                beta,
                Interval::new(theta_box[0], theta_box[1])?,
            )?),
            FamilyConfig::LaplaceAgent { theta_box } => RewardFamily::LaplaceAgent(
                LaplaceAgentParams::new(Interval::new(theta_box[0], theta_box[1])?)?,
            ),
        })
    }

    /// Core arm specification with the true parameters.
    pub fn to_spec(&self) -> Result<ArmSpec<f64>> {
        let d = &self.dynamics;
        let dynamics = DynamicsParams::scalar(
            d.a,
            d.b,
            d.k,
            Interval::new(d.state_box[0], d.state_box[1])?,
        )?;
        Ok(ArmSpec::new(
            dynamics,
            self.family()?,
            EstimateOrTruth::new(self.truth.theta, self.truth.x0),
        )?)
    }
}

impl ExperimentConfig {
    /// Checks every constraint, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(BenchError::Config("arms must list at least one arm".into()));
        }
        if self.horizon < self.arms.len() {
            return Err(BenchError::Config(format!(
                "horizon = {} must be at least the number of arms ({})",
                self.horizon,
                self.arms.len()
            )));
        }
        if self.replicates == 0 {
            return Err(BenchError::Config("replicates must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::Config(
                "algorithms must list at least one algorithm".into(),
            ));
        }
        for (i, arm) in self.arms.iter().enumerate() {
            arm.validate(i)?;
        }
        let core = |e: rogue_core::RogueError| BenchError::Config(e.to_string());
        self.confidence.validate().map_err(core)?;
        self.search.validate().map_err(core)?;
        let structure: Vec<ArmStructure<f64>> = self
            .arms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.to_spec()
                    .map(|s| s.structure())
                    .map_err(|e| BenchError::Config(format!("arms[{i}]: {e}")))
            })
            .collect::<Result<_>>()?;
        for (i, alg) in self.algorithms.iter().enumerate() {
            alg.build(&structure, &self.confidence, &self.search, self.horizon)
                .map_err(|e| {
                    BenchError::Config(format!("algorithms[{i}] ({}): {e}", alg.label()))
                })?;
        }
        Ok(())
    }

    /// Fills every horizon-dependent hyperparameter default.
    pub fn resolve(&mut self) {
        let (k, t) = (self.arms.len(), self.horizon);
        for alg in &mut self.algorithms {
            *alg = alg.resolve(k, t);
        }
    }

    /// Applies command-line overrides, then re-resolves and re-validates.
    ///
    /// `algorithms` selects by label; a label absent from the file gets defaults.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        replicates: Option<usize>,
        algorithms: Option<&[String]>,
    ) -> Result<()> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(r) = replicates {
            self.replicates = r;
        }
        if let Some(labels) = algorithms {
            let mut chosen = Vec::with_capacity(labels.len());
            for label in labels {
                let label = label.trim();
                match self.algorithms.iter().find(|a| a.label() == label) {
                    Some(a) => chosen.push(*a),
                    None => chosen.push(
                        AlgorithmConfig::from_label(label)
                            .map_err(|e| BenchError::Config(format!("--algorithms: {e}")))?,
                    ),
                }
            }
            self.algorithms = chosen;
        }
        self.resolve();
        self.validate()
    }

    pub fn to_spec(&self) -> Result<ExperimentSpec<f64>> {
        Ok(ExperimentSpec {
            arms: self
                .arms
                .iter()
                .map(ArmConfig::to_spec)
                .collect::<Result<_>>()?,
            horizon: self.horizon,
            replicates: self.replicates,
            seed: self.seed,
            algorithms: self.algorithms.clone(),
            confidence: self.confidence,
            search: self.search,
            oracle: self.oracle,
        })
    }

    /// Seeds of replicates `0..R`.
    pub fn replicate_seeds(&self) -> Vec<u64> {
        (0..self.replicates)
            .map(|r| self.seed.wrapping_add(r as u64))
            .collect()
    }
}

/// Parses a config from JSON text, resolves defaults and validates it.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(BenchError::Config("config is empty".into()));
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        BenchError::Config(format!("at '{path}': {}", e.into_inner()))
    })?;
    de.end()
        .map_err(|e| BenchError::Config(format!("trailing content: {e}")))?;
    cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
