//! Sequential decision rules behind one interface: pick an arm, then learn
//! the reward it produced.

mod baselines;
mod rogue;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsParams;
use crate::error::{config_err, Result};
use crate::estimation::{ConfidenceConfig, SearchConfig};
use crate::reward_models::RewardFamily;
use crate::scalar::Scalar;

pub use baselines::{
    DiscountedUcb, Exp3S, FixedSequence, RandomPolicy, SlidingWindowUcb, Ucb1Tuned,
};
pub use rogue::{RogueUcb, RogueVariant};

/// A bandit policy. `select` is called once per step, followed by `update`
/// with the reward of the chosen arm.
pub trait Policy<S: Scalar>: Send {
    fn name(&self) -> &'static str;

    fn select(&mut self, rng: &mut dyn RngCore) -> Result<usize>;

    fn update(&mut self, action: usize, reward: S) -> Result<()>;
}

/// Initialization pull at 1-indexed step `t`: arm `t - 1` while `t <= n_arms`.
pub fn select_init(t: usize, n_arms: usize) -> Option<usize> {
    (t >= 1 && t <= n_arms).then(|| t - 1)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Known structure of one arm: its dynamics and reward family.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmStructure<S> {
    pub dynamics: DynamicsParams<S>,
    pub family: RewardFamily<S>,
}

/// Algorithm choice and hyperparameters. Unset hyperparameters are filled by
/// [`AlgorithmConfig::resolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    RogueUcb,
    TunedRogueUcb,
    Ucb1Tuned,
    DUcb {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        xi: Option<f64>,
    },
    SwUcb {
        #[serde(default)]
        tau: Option<usize>,
        #[serde(default)]
        xi: Option<f64>,
    },
    Exp3s {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
    Random,
}

pub const DEFAULT_XI: f64 = 0.6;

/// `1 - 1 / (4 sqrt(T))`.
pub fn ducb_default_gamma(horizon: usize) -> f64 {
    1.0 - 1.0 / (4.0 * (horizon as f64).sqrt())
}

/// `ceil(4 sqrt(T ln T))`, at least 1.
pub fn swucb_default_tau(horizon: usize) -> usize {
    let t = horizon.max(2) as f64;
    ((4.0 * (t * t.ln()).sqrt()).ceil() as usize).max(1)
}

/// `min(1, sqrt(K ln(K T) / ((e - 1) T)))`.
pub fn exp3s_default_gamma(n_arms: usize, horizon: usize) -> f64 {
    let (k, t) = (n_arms as f64, horizon.max(1) as f64);
    (k * (k * t).ln() / ((std::f64::consts::E - 1.0) * t))
        .sqrt()
        .min(1.0)
}

/// `1 / T`.
pub fn exp3s_default_alpha(horizon: usize) -> f64 {
    1.0 / horizon.max(1) as f64
}

impl AlgorithmConfig {
    pub fn label(&self) -> &'static str {
        match self {
            Self::RogueUcb => "rogue_ucb",
            Self::TunedRogueUcb => "tuned_rogue_ucb",
            Self::Ucb1Tuned => "ucb1_tuned",
            Self::DUcb { .. } => "d_ucb",
            Self::SwUcb { .. } => "sw_ucb",
            Self::Exp3s { .. } => "exp3s",
            Self::Random => "random",
        }
    }

    /// Parses a label such as `d_ucb` into an algorithm with default hyperparameters.
    pub fn from_label(label: &str) -> Result<Self> {
        Ok(match label {
            "rogue_ucb" => Self::RogueUcb,
            "tuned_rogue_ucb" => Self::TunedRogueUcb,
            "ucb1_tuned" => Self::Ucb1Tuned,
            "d_ucb" => Self::DUcb {
                gamma: None,
                xi: None,
            },
            "sw_ucb" => Self::SwUcb {
                tau: None,
                xi: None,
            },
            "exp3s" => Self::Exp3s {
                gamma: None,
                alpha: None,
            },
            "random" => Self::Random,
            other => return config_err(format!("unknown algorithm '{other}'")),
        })
    }

    /// Fills unset hyperparameters with their horizon-dependent defaults.
    pub fn resolve(&self, n_arms: usize, horizon: usize) -> Self {
        match *self {
            Self::DUcb { gamma, xi } => Self::DUcb {
                gamma: Some(gamma.unwrap_or_else(|| ducb_default_gamma(horizon))),
                xi: Some(xi.unwrap_or(DEFAULT_XI)),
            },
            Self::SwUcb { tau, xi } => Self::SwUcb {
                tau: Some(tau.unwrap_or_else(|| swucb_default_tau(horizon))),
                xi: Some(xi.unwrap_or(DEFAULT_XI)),
            },
            Self::Exp3s { gamma, alpha } => Self::Exp3s {
                gamma: Some(gamma.unwrap_or_else(|| exp3s_default_gamma(n_arms, horizon))),
                alpha: Some(alpha.unwrap_or_else(|| exp3s_default_alpha(horizon))),
            },
            other => other,
        }
    }

    /// Builds a fresh policy instance.
    pub fn build<S: Scalar>(
        &self,
        arms: &[ArmStructure<S>],
        confidence: &ConfidenceConfig,
        search: &SearchConfig,
        horizon: usize,
    ) -> Result<Box<dyn Policy<S>>> {
        let k = arms.len();
        if k == 0 {
            return config_err("at least one arm is required");
        }
        Ok(match self.resolve(k, horizon) {
            Self::RogueUcb => Box::new(RogueUcb::new(
                arms,
                *confidence,
                *search,
                RogueVariant::Theoretical,
            )?),
            Self::TunedRogueUcb => Box::new(RogueUcb::new(
                arms,
                *confidence,
                *search,
                RogueVariant::Tuned,
            )?),
            Self::Ucb1Tuned => Box::new(Ucb1Tuned::new(k)),
            Self::DUcb { gamma, xi } => {
                Box::new(DiscountedUcb::new(k, gamma.unwrap(), xi.unwrap())?)
            }
            Self::SwUcb { tau, xi } => {
                Box::new(SlidingWindowUcb::new(k, tau.unwrap(), xi.unwrap())?)
            }
            Self::Exp3s { gamma, alpha } => {
                Box::new(Exp3S::new(k, gamma.unwrap(), alpha.unwrap())?)
            }
            Self::Random => Box::new(RandomPolicy::new(k)),
        })
    }
}

#[cfg(test)]
mod tests;
