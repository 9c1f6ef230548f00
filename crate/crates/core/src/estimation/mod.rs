//! Constrained maximum likelihood, confidence radii, the tuned variance and
//! the UCB inner maximization.

mod confidence;
mod nelder_mead;
mod tracker;

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsParams;
use crate::error::{config_err, Result, RogueError};
use crate::linalg::{pinv_symmetric, quadratic_form};
use crate::reward_models::{fisher_info, trajectory_kl_gradient, EstimateOrTruth, RewardFamily};
use crate::scalar::Scalar;

pub use confidence::{c_f, radius_a, radius_b, theoretical_radius, ConfidenceConfig};
pub use tracker::ArmTracker;
pub(crate) use tracker::UcbCache;

/// One reward of an arm and the step at which it was observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation<S> {
    pub time: usize,
    pub reward: S,
}

/// Everything one arm has seen: its pull indicator at every global step and
/// the rewards observed at its pulls.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmHistory<S> {
    indicators: Vec<bool>,
    observations: Vec<Observation<S>>,
}

impl<S: Scalar> ArmHistory<S> {
    pub fn new() -> Self {
        Self {
            indicators: Vec::new(),
            observations: Vec::new(),
        }
    }

    /// Builds a history, checking that observation times increase and fit inside it.
    pub fn from_parts(indicators: Vec<bool>, observations: Vec<Observation<S>>) -> Result<Self> {
        for w in observations.windows(2) {
            if w[1].time <= w[0].time {
                return config_err(format!(
                    "observation times must increase, got {} after {}",
                    w[1].time, w[0].time
                ));
            }
        }
        if let Some(last) = observations.last() {
            if last.time > indicators.len() {
                return config_err(format!(
                    "observation at step {} lies beyond the {} recorded steps",
                    last.time,
                    indicators.len()
                ));
            }
        }
        Ok(Self {
            indicators,
            observations,
        })
    }

    /// Records a reward at the current step.
    pub fn record(&mut self, reward: S) {
        self.observations.push(Observation {
            time: self.indicators.len(),
            reward,
        });
    }

    pub fn advance(&mut self, chosen: bool) {
        self.indicators.push(chosen);
    }

    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }

    pub fn observations(&self) -> &[Observation<S>] {
        &self.observations
    }

    pub fn times(&self) -> Vec<usize> {
        self.observations.iter().map(|o| o.time).collect()
    }

    pub fn n_obs(&self) -> usize {
        self.observations.len()
    }

    /// Replays the history into a tracker.
    pub fn tracker(
        &self,
        dynamics: &DynamicsParams<S>,
        family: &RewardFamily<S>,
        search: &SearchConfig,
    ) -> Result<ArmTracker<S>> {
        let mut tracker = ArmTracker::new(dynamics.clone(), *family, *search)?;
        let mut obs = self.observations.iter().peekable();
        for s in 0..=self.indicators.len() {
            if let Some(o) = obs.next_if(|o| o.time == s) {
                tracker.observe(o.reward)?;
            }
            if s < self.indicators.len() {
                tracker.advance(self.indicators[s]);
            }
        }
        Ok(tracker)
    }
}

/// Resolution and tolerances of the parameter searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub theta_points: usize,
    pub x_points: usize,
    /// Nelder-Mead iterations after the grid; 0 disables refinement.
    pub refine_iters: usize,
    pub refine_tol: f64,
    /// Refit an arm's MLE after this many new observations.
    pub refit_every: usize,
    /// Grid trajectories closer than this are treated as one.
    pub merge_tol: f64,
    /// Lattice size per axis for the default eta.
    pub eta_points: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            theta_points: 101,
            x_points: 101,
            refine_iters: 200,
            refine_tol: 1e-10,
            refit_every: 1,
            merge_tol: 1e-12,
            eta_points: 11,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("theta_points", self.theta_points),
            ("x_points", self.x_points),
            ("eta_points", self.eta_points),
        ] {
            if v < 2 {
                return config_err(format!("search.{name} must be at least 2, got {v}"));
            }
        }
        if self.refit_every == 0 {
            return config_err("search.refit_every must be at least 1");
        }
        if !(self.refine_tol.is_finite() && self.refine_tol > 0.0) {
            return config_err(format!(
                "search.refine_tol must be positive, got {}",
                self.refine_tol
            ));
        }
        if !(self.merge_tol.is_finite() && self.merge_tol >= 0.0) {
            return config_err(format!(
                "search.merge_tol must be non-negative, got {}",
                self.merge_tol
            ));
        }
        Ok(())
    }
}

/// Result of the maximum-likelihood search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLEFit<S> {
    pub estimate: EstimateOrTruth<S>,
    /// Mean negative log-likelihood at the estimate.
    pub objective: S,
    pub n_obs: usize,
}

/// Constraint level of the UCB inner problem on the average divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfidenceRadius<S> {
    /// A fixed bound, such as `A(t) sqrt(4 ln t / n)`.
    Fixed(S),
    /// `sqrt(min(eta/4, S(candidate)) ln t / n)` with the candidate's tuned variance.
    Tuned { log_t: S },
}

/// Optimistic mean reward and the parameters attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbResult<S> {
    pub value: S,
    pub argmax: EstimateOrTruth<S>,
}

/// Maximum-likelihood `(theta, x0)` of one arm.
pub fn fit_mle<S: Scalar>(
    history: &ArmHistory<S>,
    dynamics: &DynamicsParams<S>,
    family: &RewardFamily<S>,
    search: &SearchConfig,
) -> Result<MLEFit<S>> {
    if history.n_obs() == 0 {
        return Err(RogueError::Estimation(
            "cannot fit an arm with no observations".into(),
        ));
    }
    history.tracker(dynamics, family, search)?.fit()
}

/// Delta-method variance of the average trajectory divergence from `candidate` to the fit.
pub fn tuned_variance<S: Scalar>(
    fit: &MLEFit<S>,
    candidate: &EstimateOrTruth<S>,
    history: &ArmHistory<S>,
    dynamics: &DynamicsParams<S>,
    family: &RewardFamily<S>,
) -> Result<S> {
    let times = history.times();
    let n = S::from_count(times.len().max(1));
    let grad = trajectory_kl_gradient(
        candidate,
        &fit.estimate,
        &times,
        history.indicators(),
        dynamics,
        family,
    )?;
    let info = fisher_info(
        &fit.estimate,
        &times,
        history.indicators(),
        dynamics,
        family,
    )?;
    let pinv = pinv_symmetric(&info, S::lit(1e-10));
    Ok((quadratic_form(&pinv, &grad) / (n * n)).max(S::zero()))
}

/// Largest mean reward at the current step over parameters inside the divergence ball.
pub fn ucb_reward<S: Scalar>(
    fit: &MLEFit<S>,
    radius: &ConfidenceRadius<S>,
    history: &ArmHistory<S>,
    dynamics: &DynamicsParams<S>,
    family: &RewardFamily<S>,
    search: &SearchConfig,
    eta: Option<f64>,
) -> Result<UcbResult<S>> {
    if history.n_obs() == 0 {
        return Err(RogueError::Estimation(
            "UCB needs at least one observation".into(),
        ));
    }
    let tracker = history.tracker(dynamics, family, search)?;
    let ctx = tracker.prepare(&fit.estimate, eta);
    Ok(tracker.ucb(&ctx, radius, &mut UcbCache::default()))
}
