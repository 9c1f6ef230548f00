use rand::RngCore;

use crate::error::{config_err, Result};
use crate::estimation::{
    theoretical_radius, ArmTracker, ConfidenceConfig, ConfidenceRadius, MLEFit, SearchConfig,
    UcbCache,
};
use crate::scalar::Scalar;

use super::{argmax, select_init, ArmStructure, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RogueVariant {
    /// Constraint level `A(t) sqrt(4 ln t / n)`.
    Theoretical,
    /// Delta-method radius capped by `eta / 4`.
    Tuned,
}

#[derive(Debug, Clone)]
struct ArmState<S: Scalar> {
    tracker: ArmTracker<S>,
    fit: Option<MLEFit<S>>,
    obs_at_fit: usize,
    cache: UcbCache<S>,
}

/// Model-based UCB: fit each arm by maximum likelihood, then take the most
/// optimistic current mean within a trajectory-divergence ball.
#[derive(Debug, Clone)]
pub struct RogueUcb<S: Scalar> {
    arms: Vec<ArmState<S>>,
    confidence: ConfidenceConfig,
    search: SearchConfig,
    variant: RogueVariant,
    t: usize,
    indices: Vec<S>,
}

impl<S: Scalar> RogueUcb<S> {
    pub fn new(
        arms: &[ArmStructure<S>],
        confidence: ConfidenceConfig,
        search: SearchConfig,
        variant: RogueVariant,
    ) -> Result<Self> {
        if arms.is_empty() {
            return config_err("at least one arm is required");
        }
        confidence.validate()?;
        let arms = arms
            .iter()
            .map(|a| {
                Ok(ArmState {
                    tracker: ArmTracker::new(a.dynamics.clone(), a.family, search)?,
                    fit: None,
                    obs_at_fit: 0,
                    cache: UcbCache::default(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let k = arms.len();
        Ok(Self {
            arms,
            confidence,
            search,
            variant,
            t: 0,
            indices: vec![S::zero(); k],
        })
    }

    /// UCB indices computed at the last non-initialization decision.
    pub fn indices(&self) -> &[S] {
        &self.indices
    }

    /// Current fit of each arm, if computed.
    pub fn fits(&self) -> Vec<Option<MLEFit<S>>> {
        self.arms.iter().map(|a| a.fit).collect()
    }

    pub fn tracker(&self, arm: usize) -> &ArmTracker<S> {
        &self.arms[arm].tracker
    }

    fn arm_index(&mut self, arm: usize, t: usize) -> Result<S> {
        let search = self.search;
        let state = &mut self.arms[arm];
        let n = state.tracker.n_obs();
        if state.fit.is_none() || n >= state.obs_at_fit + search.refit_every {
            state.fit = Some(state.tracker.fit()?);
            state.obs_at_fit = n;
        }
        let fit = state.fit.expect("fit computed above");
        let radius = match self.variant {
            RogueVariant::Theoretical => {
                ConfidenceRadius::Fixed(S::lit(theoretical_radius(t, n, &self.confidence)?))
            }
            RogueVariant::Tuned => ConfidenceRadius::Tuned {
                log_t: S::from_count(t).ln(),
            },
        };
        let ctx = state.tracker.prepare(&fit.estimate, self.confidence.eta);
        Ok(state.tracker.ucb(&ctx, &radius, &mut state.cache).value)
    }
}

impl<S: Scalar> Policy<S> for RogueUcb<S> {
    fn name(&self) -> &'static str {
        match self.variant {
            RogueVariant::Theoretical => "rogue_ucb",
            RogueVariant::Tuned => "tuned_rogue_ucb",
        }
    }

    fn select(&mut self, _rng: &mut dyn RngCore) -> Result<usize> {
        let t = self.t + 1;
        if let Some(a) = select_init(t, self.arms.len()) {
            return Ok(a);
        }
        for arm in 0..self.arms.len() {
            self.indices[arm] = self.arm_index(arm, t)?;
        }
        Ok(argmax(&self.indices))
    }

    fn update(&mut self, action: usize, reward: S) -> Result<()> {
        if action >= self.arms.len() {
            return config_err(format!("action {action} out of range"));
        }
        for (a, state) in self.arms.iter_mut().enumerate() {
            if a == action {
                state.tracker.observe(reward)?;
            }
            state.tracker.advance(a == action);
        }
        self.t += 1;
        Ok(())
    }
}
