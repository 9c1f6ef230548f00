//! Reward families and the divergences, gradients and information matrices
//! built on top of them.
//!
//! Every family is parameterized by a static `theta` and the arm state `x`;
//! two `(theta, x0)` pairs rolled through the same action sequence induce a
//! pair of reward-law trajectories, and the trajectory KL divergence sums the
//! per-step divergences over the steps at which the arm was pulled.

pub mod agent;
pub mod glm;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsParams, Interval};
use crate::error::{config_err, Result, RogueError};
use crate::linalg::SquareMatrix;
use crate::scalar::Scalar;

pub use agent::{
    agent_atoms, agent_density, agent_kl, agent_kl_closed, agent_log_likelihood, agent_mean,
    agent_sample, LaplaceAgentParams,
};
pub use glm::{bernoulli_kl, glm_mean, glm_sample, LogisticGlmParams};

/// A `(theta, x0)` pair: ground truth of an arm or an estimate of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOrTruth<S> {
    pub theta: S,
    pub x0: S,
}

impl<S: Scalar> EstimateOrTruth<S> {
    pub fn new(theta: S, x0: S) -> Self {
        Self { theta, x0 }
    }
}

/// Reward family of an arm together with its static parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardFamily<S> {
    LogisticGlm(LogisticGlmParams<S>),
    LaplaceAgent(LaplaceAgentParams<S>),
}

/// Sufficient statistics of rewards observed at one common state.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardStats<S> {
    pub count: usize,
    pub sum: S,
    pub zeros: usize,
    pub ones: usize,
    /// `sum |r - x|` over rewards strictly inside (0, 1).
    pub interior_abs_dev: S,
}

impl<S: Scalar> RewardStats<S> {
    pub fn add(&mut self, r: S, x: S) {
        self.count += 1;
        self.sum = self.sum + r;
        if r <= S::zero() {
            self.zeros += 1;
        } else if r >= S::one() {
            self.ones += 1;
        } else {
            self.interior_abs_dev = self.interior_abs_dev + (r - x).abs();
        }
    }
}

impl<S: Scalar> RewardFamily<S> {
    pub fn theta_box(&self) -> Interval<S> {
        match self {
            Self::LogisticGlm(p) => p.theta_box,
            Self::LaplaceAgent(p) => p.theta_box,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LogisticGlm(_) => "logistic_glm",
            Self::LaplaceAgent(_) => "laplace_agent",
        }
    }

    /// Expected reward `g(theta, x)`.
    #[inline]
    pub fn mean(&self, theta: S, x: S) -> S {
        match self {
            Self::LogisticGlm(p) => glm_mean(theta, x, p),
            Self::LaplaceAgent(_) => agent_mean(x, theta),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, theta: S, x: S, rng: &mut R) -> S {
        match self {
            Self::LogisticGlm(p) => glm_sample(glm_mean(theta, x, p), rng),
            Self::LaplaceAgent(_) => agent_sample(x, theta, rng),
        }
    }

    pub fn check_reward(&self, r: S) -> Result<()> {
        if !(r >= S::zero() && r <= S::one()) {
            return Err(RogueError::Domain(format!(
                "{} reward {r} outside [0, 1]",
                self.name()
            )));
        }
        Ok(())
    }

    /// Log-likelihood of one reward (rewards are assumed already checked).
    #[inline]
    pub fn log_likelihood(&self, r: S, theta: S, x: S) -> S {
        match self {
            Self::LogisticGlm(p) => glm::log_likelihood(r, theta, x, p),
            Self::LaplaceAgent(_) => agent::log_likelihood(r, x, theta),
        }
    }

    /// Log-likelihood of a group of rewards that share the state `x`.
    #[inline]
    pub fn group_log_likelihood(&self, stats: &RewardStats<S>, theta: S, x: S) -> S {
        match self {
            Self::LogisticGlm(p) => {
                let z = p.linear(theta, x);
                stats.sum * z - S::from_count(stats.count) * crate::scalar::softplus(z)
            }
            Self::LaplaceAgent(_) => {
                let ln_half = -S::LN_2();
                let interior = stats.count - stats.zeros - stats.ones;
                S::from_count(stats.zeros) * (ln_half - x / theta)
                    + S::from_count(stats.ones) * (ln_half + (x - S::one()) / theta)
                    - S::from_count(interior) * (S::lit(2.0) * theta).ln()
                    - stats.interior_abs_dev / theta
            }
        }
    }

    /// `KL(P_{theta1, x1} || P_{theta2, x2})`.
    #[inline]
    pub fn kl(&self, theta1: S, x1: S, theta2: S, x2: S) -> S {
        match self {
            Self::LogisticGlm(p) => glm::kl_params(theta1, x1, theta2, x2, p),
            Self::LaplaceAgent(_) => agent::agent_kl_closed(x1, theta1, x2, theta2),
        }
    }

    /// KL together with its gradient in the second pair, ordered `[theta, x]`.
    #[inline]
    pub fn kl_with_grad(&self, theta1: S, x1: S, theta2: S, x2: S) -> (S, [S; 2]) {
        match self {
            Self::LogisticGlm(p) => glm::kl_with_grad(theta1, x1, theta2, x2, p),
            Self::LaplaceAgent(_) => agent::kl_with_grad(x1, theta1, x2, theta2),
        }
    }

    /// Expected information of one observation, ordered `[theta, x]`.
    #[inline]
    pub fn fisher(&self, theta: S, x: S) -> [[S; 2]; 2] {
        match self {
            Self::LogisticGlm(p) => glm::fisher(theta, x, p),
            Self::LaplaceAgent(_) => agent::fisher(x, theta),
        }
    }
}

fn check_times(times: &[usize], indicators: &[bool]) -> Result<()> {
    if let Some(&t) = times.iter().find(|&&t| t > indicators.len()) {
        return config_err(format!(
            "action time {t} lies beyond the {} recorded steps",
            indicators.len()
        ));
    }
    Ok(())
}

/// Sum over `times` of the per-step KL between the laws induced by `truth`
/// and `candidate` when both are rolled through `indicators`.
///
/// `times` index states: time `s` uses the state after `s` transitions.
pub fn trajectory_kl<S: Scalar>(
    truth: &EstimateOrTruth<S>,
    candidate: &EstimateOrTruth<S>,
    times: &[usize],
    indicators: &[bool],
    dynamics: &DynamicsParams<S>,
    family: &RewardFamily<S>,
) -> Result<S> {
    check_times(times, indicators)?;
    if times.is_empty() {
        return Ok(S::zero());
    }
    let xs = dynamics.rollout_scalar(truth.x0, indicators);
    let ys = dynamics.rollout_scalar(candidate.x0, indicators);
    Ok(times
        .iter()
        .map(|&t| family.kl(truth.theta, xs[t], candidate.theta, ys[t]))
        .sum())
}

/// Gradient of [`trajectory_kl`] with respect to the candidate `(theta, x0)`.
pub fn trajectory_kl_gradient<S: Scalar>(
    truth: &EstimateOrTruth<S>,
    candidate: &EstimateOrTruth<S>,
    times: &[usize],
    indicators: &[bool],
    dynamics: &DynamicsParams<S>,
    family: &RewardFamily<S>,
) -> Result<[S; 2]> {
    check_times(times, indicators)?;
    let xs = dynamics.rollout_scalar(truth.x0, indicators);
    let (ys, ds) = dynamics.rollout_scalar_with_derivative(candidate.x0, indicators);
    let mut grad = [S::zero(); 2];
    for &t in times {
        let (_, g) = family.kl_with_grad(truth.theta, xs[t], candidate.theta, ys[t]);
        grad[0] = grad[0] + g[0];
        grad[1] = grad[1] + g[1] * ds[t];
    }
    Ok(grad)
}

/// Information about `(theta, x0)` carried by observations at `times`,
/// propagated through the state rollout by the chain rule.
pub fn fisher_info<S: Scalar>(
    candidate: &EstimateOrTruth<S>,
    times: &[usize],
    indicators: &[bool],
    dynamics: &DynamicsParams<S>,
    family: &RewardFamily<S>,
) -> Result<SquareMatrix<S>> {
    check_times(times, indicators)?;
    let (ys, ds) = dynamics.rollout_scalar_with_derivative(candidate.x0, indicators);
    let mut info = [[S::zero(); 2]; 2];
    for &t in times {
        accumulate_info(
            &mut info,
            &family.fisher(candidate.theta, ys[t]),
            ds[t],
            S::one(),
        );
    }
    Ok(info_matrix(&info))
}

/// Adds `weight * J^T I J` with `J = diag(1, dx)`.
#[inline]
pub(crate) fn accumulate_info<S: Scalar>(
    acc: &mut [[S; 2]; 2],
    obs: &[[S; 2]; 2],
    dx: S,
    weight: S,
) {
    acc[0][0] = acc[0][0] + weight * obs[0][0];
    acc[0][1] = acc[0][1] + weight * obs[0][1] * dx;
    acc[1][0] = acc[1][0] + weight * obs[1][0] * dx;
    acc[1][1] = acc[1][1] + weight * obs[1][1] * dx * dx;
}

pub(crate) fn info_matrix<S: Scalar>(info: &[[S; 2]; 2]) -> SquareMatrix<S> {
    SquareMatrix::from_rows(&[info[0].to_vec(), info[1].to_vec()]).expect("2x2")
}
