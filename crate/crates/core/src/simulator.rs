//! Ground-truth environments, oracle benchmarks and replicated episodes.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsParams;
use crate::error::{config_err, Result};
use crate::estimation::{ConfidenceConfig, SearchConfig};
use crate::policies::{argmax, AlgorithmConfig, ArmStructure, Policy};
use crate::reward_models::{EstimateOrTruth, RewardFamily};
use crate::scalar::Scalar;

/// Largest number of distinct (step, joint state) nodes the exact oracle will visit.
pub const DEFAULT_DP_BUDGET: u64 = 50_000_000;

/// One arm of an environment: structure plus its true parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec<S> {
    pub dynamics: DynamicsParams<S>,
    pub family: RewardFamily<S>,
    pub truth: EstimateOrTruth<S>,
}

impl<S: Scalar> ArmSpec<S> {
    pub fn new(
        dynamics: DynamicsParams<S>,
        family: RewardFamily<S>,
        truth: EstimateOrTruth<S>,
    ) -> Result<Self> {
        if dynamics.dim() != 1 {
            return config_err(format!(
                "arm state must be scalar, got dimension {}",
                dynamics.dim()
            ));
        }
        if !dynamics.scalar_bounds().contains(truth.x0) {
            return config_err(format!(
                "truth x0 = {} lies outside the state box",
                truth.x0
            ));
        }
        if !family.theta_box().contains(truth.theta) {
            return config_err(format!(
                "truth theta = {} lies outside the parameter box",
                truth.theta
            ));
        }
        Ok(Self {
            dynamics,
            family,
            truth,
        })
    }

    pub fn structure(&self) -> ArmStructure<S> {
        ArmStructure {
            dynamics: self.dynamics.clone(),
            family: self.family,
        }
    }
}

/// Arms with their current states and the reward stream.
#[derive(Debug, Clone)]
pub struct Environment<S> {
    arms: Vec<ArmSpec<S>>,
    states: Vec<S>,
    t: usize,
    rng: ChaCha8Rng,
}

impl<S: Scalar> Environment<S> {
    pub fn new(arms: Vec<ArmSpec<S>>, rng: ChaCha8Rng) -> Self {
        let states = arms.iter().map(|a| a.truth.x0).collect();
        Self {
            arms,
            states,
            t: 0,
            rng,
        }
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    /// Steps taken so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn expected_reward(&self, arm: usize) -> S {
        let a = &self.arms[arm];
        a.family.mean(a.truth.theta, self.states[arm])
    }

    /// Draws the chosen arm's reward, then moves every arm one step.
    pub fn step(&mut self, action: usize) -> Result<S> {
        if action >= self.arms.len() {
            return config_err(format!(
                "action {action} out of range for {} arms",
                self.arms.len()
            ));
        }
        let arm = &self.arms[action];
        let reward = arm
            .family
            .sample(arm.truth.theta, self.states[action], &mut self.rng);
        advance_all(&self.arms, &mut self.states, action);
        self.t += 1;
        Ok(reward)
    }
}

/// Free-function form of [`Environment::step`].
pub fn env_step<S: Scalar>(env: &mut Environment<S>, action: usize) -> Result<S> {
    env.step(action)
}

fn advance_all<S: Scalar>(arms: &[ArmSpec<S>], states: &mut [S], action: usize) {
    for (a, (arm, x)) in arms.iter().zip(states.iter_mut()).enumerate() {
        *x = arm.dynamics.step_scalar(*x, a == action);
    }
}

fn means<S: Scalar>(arms: &[ArmSpec<S>], states: &[S]) -> Vec<S> {
    arms.iter()
        .zip(states)
        .map(|(a, &x)| a.family.mean(a.truth.theta, x))
        .collect()
}

/// How the benchmark action sequence is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Per-step argmax of the expected reward on the oracle's own trajectory.
    #[default]
    Greedy,
    /// Exact maximization of total expected reward by dynamic programming.
    ExactDp,
}

impl OracleMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Greedy => "greedy",
            Self::ExactDp => "exact_dp",
        }
    }
}

pub fn oracle_actions<S: Scalar>(
    arms: &[ArmSpec<S>],
    horizon: usize,
    mode: OracleMode,
) -> Result<Vec<usize>> {
    oracle_actions_with_budget(arms, horizon, mode, DEFAULT_DP_BUDGET)
}

pub fn oracle_actions_with_budget<S: Scalar>(
    arms: &[ArmSpec<S>],
    horizon: usize,
    mode: OracleMode,
    budget: u64,
) -> Result<Vec<usize>> {
    if horizon == 0 {
        return config_err("oracle horizon must be at least 1");
    }
    if arms.is_empty() {
        return config_err("at least one arm is required");
    }
    let mut states: Vec<S> = arms.iter().map(|a| a.truth.x0).collect();
    match mode {
        OracleMode::Greedy => Ok((0..horizon)
            .map(|_| {
                let a = argmax(&means(arms, &states));
                advance_all(arms, &mut states, a);
                a
            })
            .collect()),
        OracleMode::ExactDp => exact_dp(arms, horizon, budget),
    }
}

/// Backward induction over the reachable joint states. Identical joint
/// states are merged within a step, so the cost is the number of distinct
/// (step, state) nodes rather than the number of action sequences.
fn exact_dp<S: Scalar>(arms: &[ArmSpec<S>], horizon: usize, budget: u64) -> Result<Vec<usize>> {
    let k = arms.len();
    let key = |x: &[S]| x.iter().map(|v| v.as_f64().to_bits()).collect::<Vec<u64>>();
    let mut layers: Vec<Vec<Vec<S>>> = vec![vec![arms.iter().map(|a| a.truth.x0).collect()]];
    let mut children: Vec<Vec<usize>> = Vec::with_capacity(horizon);
    let mut nodes = 1u64;
    for _ in 1..horizon {
        let current = layers.last().expect("non-empty");
        let mut next: Vec<Vec<S>> = Vec::new();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut links = Vec::with_capacity(current.len() * k);
        for states in current {
            for a in 0..k {
                let mut child = states.clone();
                advance_all(arms, &mut child, a);
                let slot = *index.entry(key(&child)).or_insert_with(|| {
                    next.push(child);
                    next.len() - 1
                });
                links.push(slot);
            }
        }
        nodes += next.len() as u64;
        if nodes > budget {
            return config_err(format!(
                "exact_dp reached more than {budget} distinct states before step {horizon}"
            ));
        }
        children.push(links);
        layers.push(next);
    }
    // values[t][i]: best total from node i of step t to the horizon
    let mut values: Vec<Vec<S>> = vec![Vec::new(); horizon];
    let mut choice: Vec<Vec<usize>> = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let mut v = Vec::with_capacity(layers[t].len());
        let mut c = Vec::with_capacity(layers[t].len());
        for (i, states) in layers[t].iter().enumerate() {
            let g = means(arms, states);
            let totals: Vec<S> = (0..k)
                .map(|a| {
                    let future = if t + 1 < horizon {
                        values[t + 1][children[t][i * k + a]]
                    } else {
                        S::zero()
                    };
                    g[a] + future
                })
                .collect();
            let best = argmax(&totals);
            v.push(totals[best]);
            c.push(best);
        }
        values[t] = v;
        choice[t] = c;
    }
    let mut actions = Vec::with_capacity(horizon);
    let mut node = 0usize;
    for t in 0..horizon {
        let a = choice[t][node];
        actions.push(a);
        if t + 1 < horizon {
            node = children[t][node * k + a];
        }
    }
    Ok(actions)
}

/// Expected reward collected at each step by following `actions` from the truths.
pub fn sequence_expected_rewards<S: Scalar>(arms: &[ArmSpec<S>], actions: &[usize]) -> Vec<S> {
    let mut states: Vec<S> = arms.iter().map(|a| a.truth.x0).collect();
    actions
        .iter()
        .map(|&a| {
            let g = arms[a].family.mean(arms[a].truth.theta, states[a]);
            advance_all(arms, &mut states, a);
            g
        })
        .collect()
}

/// One step of an episode. `t` is 1-indexed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<S> {
    pub t: usize,
    pub action: usize,
    pub reward: S,
    pub expected_reward: S,
    pub oracle_expected_reward: S,
    pub cumulative_regret: S,
    pub avg_reward: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult<S> {
    pub algorithm: String,
    pub replicate: usize,
    pub seed: u64,
    pub records: Vec<StepRecord<S>>,
}

impl<S: Scalar> EpisodeResult<S> {
    pub fn final_regret(&self) -> S {
        self.records
            .last()
            .map_or(S::zero(), |r| r.cumulative_regret)
    }

    pub fn final_avg_reward(&self) -> S {
        self.records.last().map_or(S::zero(), |r| r.avg_reward)
    }
}

/// Environment reward stream of a replicate.
pub fn environment_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Policy randomness of algorithm `index` in a replicate.
pub fn policy_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + index as u64);
    rng
}

/// Runs `policy` for `horizon` steps against a fresh environment and the given oracle.
pub fn run_episode_against<S: Scalar>(
    policy: &mut dyn Policy<S>,
    arms: &[ArmSpec<S>],
    oracle_rewards: &[S],
    seed: u64,
    policy_index: usize,
) -> Result<EpisodeResult<S>> {
    let mut env = Environment::new(arms.to_vec(), environment_rng(seed));
    let mut prng = policy_rng(seed, policy_index);
    let mut records = Vec::with_capacity(oracle_rewards.len());
    let mut regret = S::zero();
    let mut total = S::zero();
    for (i, &oracle) in oracle_rewards.iter().enumerate() {
        let action = policy.select(&mut prng)?;
        if action >= env.n_arms() {
            return config_err(format!(
                "{} chose arm {action} of {}",
                policy.name(),
                env.n_arms()
            ));
        }
        let expected = env.expected_reward(action);
        let reward = env.step(action)?;
        policy.update(action, reward)?;
        regret = regret + (oracle - expected);
        total = total + reward;
        records.push(StepRecord {
            t: i + 1,
            action,
            reward,
            expected_reward: expected,
            oracle_expected_reward: oracle,
            cumulative_regret: regret,
            avg_reward: total / S::from_count(i + 1),
        });
    }
    Ok(EpisodeResult {
        algorithm: policy.name().to_string(),
        replicate: 0,
        seed,
        records,
    })
}

/// Runs one episode, computing the oracle in the requested mode.
pub fn run_episode<S: Scalar>(
    policy: &mut dyn Policy<S>,
    arms: &[ArmSpec<S>],
    horizon: usize,
    seed: u64,
    mode: OracleMode,
) -> Result<EpisodeResult<S>> {
    let oracle = sequence_expected_rewards(arms, &oracle_actions(arms, horizon, mode)?);
    run_episode_against(policy, arms, &oracle, seed, 0)
}

/// A full replicated benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec<S> {
    pub arms: Vec<ArmSpec<S>>,
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub algorithms: Vec<AlgorithmConfig>,
    pub confidence: ConfidenceConfig,
    pub search: SearchConfig,
    pub oracle: OracleMode,
}

/// Mean and standard-error bands per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve<S> {
    pub algorithm: String,
    pub mean_regret: Vec<S>,
    pub stderr_regret: Vec<S>,
    pub mean_avg_reward: Vec<S>,
    pub stderr_avg_reward: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult<S> {
    pub oracle_actions: Vec<usize>,
    /// Algorithm-major, then replicate.
    pub episodes: Vec<EpisodeResult<S>>,
    pub curves: Vec<Curve<S>>,
}

/// Sample mean and standard error of the mean; the error is 0 for one sample.
pub fn mean_stderr<S: Scalar>(values: &[S]) -> (S, S) {
    let n = values.len();
    if n == 0 {
        return (S::nan(), S::nan());
    }
    let nf = S::from_count(n);
    let mean = values.iter().copied().sum::<S>() / nf;
    if n == 1 {
        return (mean, S::zero());
    }
    let var = values.iter().map(|v| (*v - mean) * (*v - mean)).sum::<S>() / S::from_count(n - 1);
    (mean, (var / nf).sqrt())
}

fn curve<S: Scalar>(algorithm: &str, episodes: &[&EpisodeResult<S>], horizon: usize) -> Curve<S> {
    let mut c = Curve {
        algorithm: algorithm.to_string(),
        mean_regret: Vec::with_capacity(horizon),
        stderr_regret: Vec::with_capacity(horizon),
        mean_avg_reward: Vec::with_capacity(horizon),
        stderr_avg_reward: Vec::with_capacity(horizon),
    };
    for t in 0..horizon {
        let regrets: Vec<S> = episodes
            .iter()
            .map(|e| e.records[t].cumulative_regret)
            .collect();
        let rewards: Vec<S> = episodes.iter().map(|e| e.records[t].avg_reward).collect();
        let (m, s) = mean_stderr(&regrets);
        c.mean_regret.push(m);
        c.stderr_regret.push(s);
        let (m, s) = mean_stderr(&rewards);
        c.mean_avg_reward.push(m);
        c.stderr_avg_reward.push(s);
    }
    c
}

impl<S: Scalar> ExperimentSpec<S> {
    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return config_err("at least one arm is required");
        }
        if self.horizon < self.arms.len() {
            return config_err(format!(
                "horizon {} must be at least the number of arms {}",
                self.horizon,
                self.arms.len()
            ));
        }
        if self.replicates == 0 {
            return config_err("replicates must be at least 1");
        }
        if self.algorithms.is_empty() {
            return config_err("at least one algorithm is required");
        }
        self.confidence.validate()?;
        self.search.validate()
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        self.seed.wrapping_add(replicate as u64)
    }
}

/// Runs every (algorithm, replicate) pair. `workers > 1` runs them on a thread
/// pool; results do not depend on the worker count.
pub fn run_experiment<S: Scalar>(
    spec: &ExperimentSpec<S>,
    workers: usize,
) -> Result<ExperimentResult<S>> {
    spec.validate()?;
    let oracle = oracle_actions(&spec.arms, spec.horizon, spec.oracle)?;
    let oracle_rewards = sequence_expected_rewards(&spec.arms, &oracle);
    let structure: Vec<ArmStructure<S>> = spec.arms.iter().map(ArmSpec::structure).collect();
    let jobs: Vec<(usize, usize)> = (0..spec.algorithms.len())
        .flat_map(|a| (0..spec.replicates).map(move |r| (a, r)))
        .collect();
    let run = |&(alg, rep): &(usize, usize)| -> Result<EpisodeResult<S>> {
        let config = spec.algorithms[alg];
        let mut policy = config.build(&structure, &spec.confidence, &spec.search, spec.horizon)?;
        let seed = spec.replicate_seed(rep);
        let mut ep = run_episode_against(policy.as_mut(), &spec.arms, &oracle_rewards, seed, alg)?;
        ep.algorithm = config.label().to_string();
        ep.replicate = rep;
        Ok(ep)
    };
    let episodes: Vec<EpisodeResult<S>> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| crate::error::RogueError::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?
    } else {
        jobs.iter().map(run).collect::<Result<Vec<_>>>()?
    };
    let curves = spec
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, config)| {
            let eps: Vec<&EpisodeResult<S>> = episodes
                [a * spec.replicates..(a + 1) * spec.replicates]
                .iter()
                .collect();
            curve(config.label(), &eps, spec.horizon)
        })
        .collect();
    Ok(ExperimentResult {
        oracle_actions: oracle,
        episodes,
        curves,
    })
}
