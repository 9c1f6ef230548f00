use std::collections::VecDeque;

use rand::{Rng, RngCore};

use crate::error::{config_err, Result};
use crate::scalar::Scalar;

use super::{argmax, select_init, Policy};

fn check_action(action: usize, k: usize) -> Result<()> {
    if action >= k {
        return config_err(format!("action {action} out of range for {k} arms"));
    }
    Ok(())
}

/// UCB1 with the variance-aware padding `sqrt(ln n / n_a * min(1/4, V_a))`.
#[derive(Debug, Clone)]
pub struct Ucb1Tuned<S> {
    counts: Vec<usize>,
    sums: Vec<S>,
    sum_squares: Vec<S>,
    t: usize,
}

impl<S: Scalar> Ucb1Tuned<S> {
    pub fn new(n_arms: usize) -> Self {
        Self {
            counts: vec![0; n_arms],
            sums: vec![S::zero(); n_arms],
            sum_squares: vec![S::zero(); n_arms],
            t: 0,
        }
    }

    pub fn indices(&self) -> Vec<S> {
        let ln_n = S::from_count(self.t.max(1)).ln();
        let quarter = S::lit(0.25);
        (0..self.counts.len())
            .map(|a| {
                let n = S::from_count(self.counts[a]);
                let mean = self.sums[a] / n;
                let var = (self.sum_squares[a] / n - mean * mean).max(S::zero());
                let v = var + (S::lit(2.0) * ln_n / n).sqrt();
                mean + (ln_n / n * quarter.min(v)).sqrt()
            })
            .collect()
    }
}

impl<S: Scalar> Policy<S> for Ucb1Tuned<S> {
    fn name(&self) -> &'static str {
        "ucb1_tuned"
    }

    fn select(&mut self, _rng: &mut dyn RngCore) -> Result<usize> {
        if let Some(a) = select_init(self.t + 1, self.counts.len()) {
            return Ok(a);
        }
        Ok(argmax(&self.indices()))
    }

    fn update(&mut self, action: usize, reward: S) -> Result<()> {
        check_action(action, self.counts.len())?;
        self.counts[action] += 1;
        self.sums[action] = self.sums[action] + reward;
        self.sum_squares[action] = self.sum_squares[action] + reward * reward;
        self.t += 1;
        Ok(())
    }
}

/// Discounted UCB: means and counts decay by `gamma` each step.
#[derive(Debug, Clone)]
pub struct DiscountedUcb<S> {
    gamma: S,
    xi: S,
    counts: Vec<S>,
    sums: Vec<S>,
    t: usize,
}

impl<S: Scalar> DiscountedUcb<S> {
    pub fn new(n_arms: usize, gamma: f64, xi: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return config_err(format!("d_ucb gamma must lie in (0, 1], got {gamma}"));
        }
        if !(xi.is_finite() && xi > 0.0) {
            return config_err(format!("d_ucb xi must be positive, got {xi}"));
        }
        Ok(Self {
            gamma: S::lit(gamma),
            xi: S::lit(xi),
            counts: vec![S::zero(); n_arms],
            sums: vec![S::zero(); n_arms],
            t: 0,
        })
    }

    /// Discounted counts `N_t(gamma, a)`.
    pub fn counts(&self) -> &[S] {
        &self.counts
    }

    /// Discounted reward sums.
    pub fn sums(&self) -> &[S] {
        &self.sums
    }

    pub fn indices(&self) -> Vec<S> {
        let total: S = self.counts.iter().copied().sum();
        let ln_total = total.ln().max(S::zero());
        let two = S::lit(2.0);
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| {
                if n <= S::zero() {
                    S::infinity()
                } else {
                    s / n + two * (self.xi * ln_total / n).sqrt()
                }
            })
            .collect()
    }
}

impl<S: Scalar> Policy<S> for DiscountedUcb<S> {
    fn name(&self) -> &'static str {
        "d_ucb"
    }

    fn select(&mut self, _rng: &mut dyn RngCore) -> Result<usize> {
        if let Some(a) = select_init(self.t + 1, self.counts.len()) {
            return Ok(a);
        }
        Ok(argmax(&self.indices()))
    }

    fn update(&mut self, action: usize, reward: S) -> Result<()> {
        check_action(action, self.counts.len())?;
        for (n, s) in self.counts.iter_mut().zip(self.sums.iter_mut()) {
            *n = *n * self.gamma;
            *s = *s * self.gamma;
        }
        self.counts[action] = self.counts[action] + S::one();
        self.sums[action] = self.sums[action] + reward;
        self.t += 1;
        Ok(())
    }
}

/// Sliding-window UCB over the last `tau` steps.
#[derive(Debug, Clone)]
pub struct SlidingWindowUcb<S> {
    tau: usize,
    xi: S,
    window: VecDeque<(usize, S)>,
    counts: Vec<usize>,
    sums: Vec<S>,
    t: usize,
}

impl<S: Scalar> SlidingWindowUcb<S> {
    pub fn new(n_arms: usize, tau: usize, xi: f64) -> Result<Self> {
        if tau < 1 {
            return config_err("sw_ucb tau must be at least 1");
        }
        if !(xi.is_finite() && xi > 0.0) {
            return config_err(format!("sw_ucb xi must be positive, got {xi}"));
        }
        Ok(Self {
            tau,
            xi: S::lit(xi),
            window: VecDeque::with_capacity(tau),
            counts: vec![0; n_arms],
            sums: vec![S::zero(); n_arms],
            t: 0,
        })
    }

    pub fn indices(&self) -> Vec<S> {
        let ln_w = S::from_count(self.t.min(self.tau).max(1)).ln();
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&c, &s)| {
                if c == 0 {
                    S::infinity()
                } else {
                    let n = S::from_count(c);
                    s / n + (self.xi * ln_w / n).sqrt()
                }
            })
            .collect()
    }
}

impl<S: Scalar> Policy<S> for SlidingWindowUcb<S> {
    fn name(&self) -> &'static str {
        "sw_ucb"
    }

    fn select(&mut self, _rng: &mut dyn RngCore) -> Result<usize> {
        if let Some(a) = select_init(self.t + 1, self.counts.len()) {
            return Ok(a);
        }
        Ok(argmax(&self.indices()))
    }

    fn update(&mut self, action: usize, reward: S) -> Result<()> {
        check_action(action, self.counts.len())?;
        if self.window.len() == self.tau {
            let (a, r) = self.window.pop_front().expect("window is full");
            self.counts[a] -= 1;
            self.sums[a] = self.sums[a] - r;
            if self.counts[a] == 0 {
                self.sums[a] = S::zero();
            }
        }
        self.window.push_back((action, reward));
        self.counts[action] += 1;
        self.sums[action] = self.sums[action] + reward;
        self.t += 1;
        Ok(())
    }
}

/// Exponential weights with uniform mixing, for arbitrary reward sequences.
#[derive(Debug, Clone)]
pub struct Exp3S<S> {
    gamma: S,
    alpha: S,
    weights: Vec<S>,
    last_probs: Vec<S>,
}

impl<S: Scalar> Exp3S<S> {
    pub fn new(n_arms: usize, gamma: f64, alpha: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return config_err(format!("exp3s gamma must lie in (0, 1], got {gamma}"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return config_err(format!("exp3s alpha must be non-negative, got {alpha}"));
        }
        let w = S::one() / S::from_count(n_arms);
        Ok(Self {
            gamma: S::lit(gamma),
            alpha: S::lit(alpha),
            weights: vec![w; n_arms],
            last_probs: vec![w; n_arms],
        })
    }

    /// `(1 - gamma) w / sum(w) + gamma / K`.
    pub fn probabilities(&self) -> Vec<S> {
        let k = S::from_count(self.weights.len());
        let total: S = self.weights.iter().copied().sum();
        self.weights
            .iter()
            .map(|&w| (S::one() - self.gamma) * w / total + self.gamma / k)
            .collect()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }
}

impl<S: Scalar> Policy<S> for Exp3S<S> {
    fn name(&self) -> &'static str {
        "exp3s"
    }

    fn select(&mut self, rng: &mut dyn RngCore) -> Result<usize> {
        self.last_probs = self.probabilities();
        let u = S::lit(rng.gen::<f64>());
        let mut acc = S::zero();
        for (a, &p) in self.last_probs.iter().enumerate() {
            acc = acc + p;
            if u < acc {
                return Ok(a);
            }
        }
        Ok(self.last_probs.len() - 1)
    }

    fn update(&mut self, action: usize, reward: S) -> Result<()> {
        check_action(action, self.weights.len())?;
        let k = S::from_count(self.weights.len());
        let total: S = self.weights.iter().copied().sum();
        let estimate = reward / self.last_probs[action];
        let mix = S::E() * self.alpha / k * total;
        for (a, w) in self.weights.iter_mut().enumerate() {
            let boost = if a == action {
                (self.gamma * estimate / k).exp()
            } else {
                S::one()
            };
            *w = *w * boost + mix;
        }
        let total: S = self.weights.iter().copied().sum();
        self.weights.iter_mut().for_each(|w| *w = *w / total);
        Ok(())
    }
}

/// Uniformly random arm every step.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    n_arms: usize,
}

impl RandomPolicy {
    pub fn new(n_arms: usize) -> Self {
        Self { n_arms }
    }
}

impl<S: Scalar> Policy<S> for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(rng.gen_range(0..self.n_arms))
    }

    fn update(&mut self, action: usize, _reward: S) -> Result<()> {
        check_action(action, self.n_arms)
    }
}

/// Replays a fixed action sequence, repeating its last action past the end.
#[derive(Debug, Clone)]
pub struct FixedSequence {
    actions: Vec<usize>,
    t: usize,
}

impl FixedSequence {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions, t: 0 }
    }
}

impl<S: Scalar> Policy<S> for FixedSequence {
    fn name(&self) -> &'static str {
        "fixed_sequence"
    }

    fn select(&mut self, _rng: &mut dyn RngCore) -> Result<usize> {
        match self.actions.get(self.t).or(self.actions.last()) {
            Some(&a) => Ok(a),
            None => config_err("fixed sequence is empty"),
        }
    }

    fn update(&mut self, _action: usize, _reward: S) -> Result<()> {
        self.t += 1;
        Ok(())
    }
}
