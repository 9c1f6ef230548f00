//! Incremental per-arm likelihood state.
//!
//! The tracker follows one arm through time. It keeps the current state of
//! every x0 on the search grid, and the running negative log-likelihood of
//! every `(theta, x0)` grid point. Once all grid trajectories coincide (the
//! projected-linear map is monotone, so the endpoints bracket every x0) the
//! history no longer depends on x0, and later observations are pooled by
//! state into sufficient statistics.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::dynamics::{DynamicsParams, Interval};
use crate::error::{config_err, Result, RogueError};
use crate::linalg::{pinv_symmetric, quadratic_form, SquareMatrix};
use crate::reward_models::{
    accumulate_info, info_matrix, EstimateOrTruth, RewardFamily, RewardStats,
};
use crate::scalar::Scalar;

use super::nelder_mead::minimize;
use super::{ConfidenceRadius, MLEFit, SearchConfig, UcbResult};

/// Relative eigenvalue cutoff of the information pseudoinverse.
const PINV_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct Transient<S> {
    time: usize,
    reward: S,
    /// State of each grid x0 at `time`.
    states: Vec<S>,
}

#[derive(Debug, Clone)]
struct Group<S> {
    state: S,
    stats: RewardStats<S>,
}

/// Per-arm observation history with grid caches for estimation.
#[derive(Debug, Clone)]
pub struct ArmTracker<S: Scalar> {
    dynamics: DynamicsParams<S>,
    family: RewardFamily<S>,
    search: SearchConfig,
    thetas: Vec<S>,
    xs: Vec<S>,
    indicators: Vec<bool>,
    grid_state: Vec<S>,
    merged_at: Option<usize>,
    transient: Vec<Transient<S>>,
    groups: Vec<Group<S>>,
    group_index: HashMap<u64, usize>,
    nll: Vec<S>,
    n_obs: usize,
}

/// Quantities at a fit that every divergence evaluation needs.
#[derive(Debug, Clone)]
pub(crate) struct FitContext<S> {
    pub fit: EstimateOrTruth<S>,
    trans_states: Vec<S>,
    trans_derivs: Vec<S>,
    pub current: S,
    pub info_pinv: SquareMatrix<S>,
    pub eta: S,
    n: S,
}

#[derive(Debug, Clone, Copy)]
enum PointDivergence<S> {
    Unknown,
    Lower(S),
    Exact { d: S, s: S },
}

/// Grid divergences and variances for one fit of one arm.
#[derive(Debug, Clone)]
pub(crate) struct UcbCache<S> {
    key: Option<(usize, EstimateOrTruth<S>)>,
    rows: Vec<Option<(S, [S; 2])>>,
    points: Vec<PointDivergence<S>>,
}

impl<S> Default for UcbCache<S> {
    fn default() -> Self {
        Self {
            key: None,
            rows: Vec::new(),
            points: Vec::new(),
        }
    }
}

struct Rolled<S> {
    trans_states: Vec<S>,
    trans_derivs: Vec<S>,
    current: S,
}

struct HeapEntry<S> {
    value: S,
    index: usize,
}

impl<S: Scalar> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for HeapEntry<S> {}

impl<S: Scalar> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for HeapEntry<S> {
    // larger value first, then smaller index
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .partial_cmp(&other.value)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl<S: Scalar> ArmTracker<S> {
    pub fn new(
        dynamics: DynamicsParams<S>,
        family: RewardFamily<S>,
        search: SearchConfig,
    ) -> Result<Self> {
        search.validate()?;
        if dynamics.dim() != 1 {
            return config_err(format!(
                "estimation supports scalar arm states only, got dimension {}",
                dynamics.dim()
            ));
        }
        let thetas = family.theta_box().grid(search.theta_points);
        let xs = dynamics.scalar_bounds().grid(search.x_points);
        let nx = xs.len();
        Ok(Self {
            nll: vec![S::zero(); thetas.len() * nx],
            grid_state: xs.clone(),
            thetas,
            xs,
            dynamics,
            family,
            search,
            indicators: Vec::new(),
            merged_at: None,
            transient: Vec::new(),
            groups: Vec::new(),
            group_index: HashMap::new(),
            n_obs: 0,
        })
    }

    pub fn family(&self) -> &RewardFamily<S> {
        &self.family
    }

    pub fn dynamics(&self) -> &DynamicsParams<S> {
        &self.dynamics
    }

    /// Number of rewards observed.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Number of transitions taken so far.
    pub fn steps(&self) -> usize {
        self.indicators.len()
    }

    /// Step at which all grid trajectories coincided, if they have.
    pub fn merged_at(&self) -> Option<usize> {
        self.merged_at
    }

    pub fn theta_grid(&self) -> &[S] {
        &self.thetas
    }

    pub fn x_grid(&self) -> &[S] {
        &self.xs
    }

    /// Records a reward observed at the current step.
    pub fn observe(&mut self, reward: S) -> Result<()> {
        self.family.check_reward(reward)?;
        let nx = self.xs.len();
        if self.merged_at.is_some() {
            let x = self.grid_state[0];
            let slot = *self
                .group_index
                .entry(x.as_f64().to_bits())
                .or_insert_with(|| {
                    self.groups.push(Group {
                        state: x,
                        stats: RewardStats::default(),
                    });
                    self.groups.len() - 1
                });
            self.groups[slot].stats.add(reward, x);
            for (i, &theta) in self.thetas.iter().enumerate() {
                let ll = self.family.log_likelihood(reward, theta, x);
                for v in &mut self.nll[i * nx..(i + 1) * nx] {
                    *v = *v - ll;
                }
            }
        } else {
            for (i, &theta) in self.thetas.iter().enumerate() {
                let row = &mut self.nll[i * nx..(i + 1) * nx];
                for (v, &x) in row.iter_mut().zip(&self.grid_state) {
                    *v = *v - self.family.log_likelihood(reward, theta, x);
                }
            }
            self.transient.push(Transient {
                time: self.steps(),
                reward,
                states: self.grid_state.clone(),
            });
        }
        self.n_obs += 1;
        Ok(())
    }

    /// Advances the arm state by one transition.
    pub fn advance(&mut self, chosen: bool) {
        self.indicators.push(chosen);
        if self.merged_at.is_some() {
            let next = self.dynamics.step_scalar(self.grid_state[0], chosen);
            self.grid_state.iter_mut().for_each(|x| *x = next);
            return;
        }
        for x in self.grid_state.iter_mut() {
            *x = self.dynamics.step_scalar(*x, chosen);
        }
        let (lo, hi) = self
            .grid_state
            .iter()
            .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        if hi - lo <= S::lit(self.search.merge_tol) {
            let common = self.grid_state[0];
            self.grid_state.iter_mut().for_each(|x| *x = common);
            self.merged_at = Some(self.steps());
        }
    }

    /// Current state of the arm if it started at `x0`.
    pub fn current_state(&self, x0: S) -> S {
        self.roll(x0).current
    }

    fn roll(&self, x0: S) -> Rolled<S> {
        let horizon = self.merged_at.unwrap_or(self.steps());
        let mut trans_states = Vec::with_capacity(self.transient.len());
        let mut trans_derivs = Vec::with_capacity(self.transient.len());
        let mut obs = self.transient.iter().peekable();
        let (mut x, mut d) = (self.dynamics.scalar_bounds().clamp(x0), S::one());
        for s in 0..=horizon {
            while obs.peek().is_some_and(|o| o.time == s) {
                obs.next();
                trans_states.push(x);
                trans_derivs.push(d);
            }
            if s < horizon {
                (x, d) = self
                    .dynamics
                    .step_scalar_with_derivative(x, d, self.indicators[s]);
            }
        }
        let current = if self.merged_at.is_some() {
            self.grid_state[0]
        } else {
            x
        };
        Rolled {
            trans_states,
            trans_derivs,
            current,
        }
    }

    /// Negative log-likelihood summed over all observations.
    pub fn nll(&self, theta: S, x0: S) -> S {
        let rolled = self.roll(x0);
        let trans: S = self
            .transient
            .iter()
            .zip(&rolled.trans_states)
            .map(|(o, &x)| -self.family.log_likelihood(o.reward, theta, x))
            .sum();
        let pooled: S = self
            .groups
            .iter()
            .map(|g| -self.family.group_log_likelihood(&g.stats, theta, g.state))
            .sum();
        trans + pooled
    }

    /// Negative log-likelihood on the grid, theta-major.
    pub fn nll_grid(&self) -> &[S] {
        &self.nll
    }

    fn grid_spacing(&self) -> [S; 2] {
        let theta_box = self.family.theta_box();
        let x_box = self.dynamics.scalar_bounds();
        [
            theta_box.width() / S::from_count(self.thetas.len() - 1),
            x_box.width() / S::from_count(self.xs.len() - 1),
        ]
    }

    fn clamp_point(&self, p: [S; 2]) -> [S; 2] {
        [
            self.family.theta_box().clamp(p[0]),
            self.dynamics.scalar_bounds().clamp(p[1]),
        ]
    }

    /// Grid search followed by Nelder-Mead refinement of the mean negative log-likelihood.
    pub fn fit(&self) -> Result<MLEFit<S>> {
        if self.n_obs == 0 {
            return Err(RogueError::Estimation(
                "cannot fit an arm with no observations".into(),
            ));
        }
        let nx = self.xs.len();
        let mut best = 0usize;
        for (k, &v) in self.nll.iter().enumerate() {
            if v < self.nll[best] {
                best = k;
            }
        }
        let n = S::from_count(self.n_obs);
        let start = [self.thetas[best / nx], self.xs[best % nx]];
        let grid_value = self.nll[best] / n;
        let mut estimate = EstimateOrTruth::new(start[0], start[1]);
        let mut objective = grid_value;
        if self.search.refine_iters > 0 {
            let polished = minimize(
                |p| {
                    let q = self.clamp_point(p);
                    self.nll(q[0], q[1]) / n
                },
                start,
                self.grid_spacing(),
                self.search.refine_iters,
                S::lit(self.search.refine_tol),
            );
            if polished.value < grid_value {
                let q = self.clamp_point(polished.point);
                estimate = EstimateOrTruth::new(q[0], q[1]);
                objective = polished.value;
            }
        }
        if !objective.is_finite() {
            return Err(RogueError::Estimation(format!(
                "{} likelihood has no finite maximizer on the parameter box",
                self.family.name()
            )));
        }
        Ok(MLEFit {
            estimate,
            objective,
            n_obs: self.n_obs,
        })
    }

    /// Rolls the fit through the history and collects its information matrix and eta.
    pub(crate) fn prepare(&self, fit: &EstimateOrTruth<S>, eta: Option<f64>) -> FitContext<S> {
        let rolled = self.roll(fit.x0);
        let mut info = [[S::zero(); 2]; 2];
        for (&x, &d) in rolled.trans_states.iter().zip(&rolled.trans_derivs) {
            accumulate_info(&mut info, &self.family.fisher(fit.theta, x), d, S::one());
        }
        for g in &self.groups {
            let fi = self.family.fisher(fit.theta, g.state);
            accumulate_info(&mut info, &fi, S::zero(), S::from_count(g.stats.count));
        }
        let info_pinv = pinv_symmetric(&info_matrix(&info), S::lit(PINV_REL_TOL));
        let eta = match eta {
            Some(v) => S::lit(v),
            None => self.default_eta(fit.theta, rolled.current),
        };
        FitContext {
            fit: *fit,
            trans_states: rolled.trans_states,
            trans_derivs: rolled.trans_derivs,
            current: rolled.current,
            info_pinv,
            eta,
            n: S::from_count(self.n_obs),
        }
    }

    /// Largest per-step KL from a coarse parameter lattice to the fit's current law.
    fn default_eta(&self, theta_fit: S, x_fit: S) -> S {
        let m = self.search.eta_points;
        let thetas = self.family.theta_box().grid(m);
        let xs = self.dynamics.scalar_bounds().grid(m);
        let mut eta = S::zero();
        for &th in &thetas {
            for &x in &xs {
                let kl = self.family.kl(th, x, theta_fit, x_fit);
                if kl.is_finite() {
                    eta = eta.max(kl);
                }
            }
        }
        eta
    }

    /// Pooled-group contribution to the divergence for a candidate `theta`.
    fn pooled_divergence(&self, ctx: &FitContext<S>, theta: S) -> (S, [S; 2]) {
        let mut d = S::zero();
        let mut g0 = S::zero();
        for g in &self.groups {
            let (kl, grad) = self
                .family
                .kl_with_grad(theta, g.state, ctx.fit.theta, g.state);
            let c = S::from_count(g.stats.count);
            d = d + c * kl;
            g0 = g0 + c * grad[0];
        }
        (d, [g0, S::zero()])
    }

    fn transient_divergence<'a>(
        &self,
        ctx: &FitContext<S>,
        theta: S,
        states: impl Iterator<Item = S> + 'a,
    ) -> (S, [S; 2]) {
        let mut d = S::zero();
        let mut grad = [S::zero(); 2];
        for ((x, &xf), &df) in states.zip(&ctx.trans_states).zip(&ctx.trans_derivs) {
            let (kl, g) = self.family.kl_with_grad(theta, x, ctx.fit.theta, xf);
            d = d + kl;
            grad[0] = grad[0] + g[0];
            grad[1] = grad[1] + g[1] * df;
        }
        (d, grad)
    }

    /// Trajectory KL from `(theta, x0)` to the fit and its gradient in the fit.
    pub(crate) fn divergence(&self, ctx: &FitContext<S>, theta: S, x0: S) -> (S, [S; 2]) {
        let rolled = self.roll(x0);
        let (dt, gt) = self.transient_divergence(ctx, theta, rolled.trans_states.into_iter());
        let (dp, gp) = self.pooled_divergence(ctx, theta);
        (dt + dp, [gt[0] + gp[0], gt[1] + gp[1]])
    }

    /// `(1/n^2) grad^T pinv(I) grad`.
    pub(crate) fn variance(&self, ctx: &FitContext<S>, grad: &[S; 2]) -> S {
        (quadratic_form(&ctx.info_pinv, grad) / (ctx.n * ctx.n)).max(S::zero())
    }

    fn feasible(
        &self,
        ctx: &FitContext<S>,
        radius: &ConfidenceRadius<S>,
        d: S,
        grad: &[S; 2],
    ) -> bool {
        if !d.is_finite() {
            return false;
        }
        let level = match *radius {
            ConfidenceRadius::Fixed(r) => r,
            ConfidenceRadius::Tuned { log_t } => {
                let s = self.variance(ctx, grad).min(ctx.eta / S::lit(4.0));
                (s * log_t / ctx.n).sqrt()
            }
        };
        d / ctx.n <= level
    }

    /// Largest level any candidate can be granted.
    fn level_cap(&self, ctx: &FitContext<S>, radius: &ConfidenceRadius<S>) -> S {
        match *radius {
            ConfidenceRadius::Fixed(r) => r,
            ConfidenceRadius::Tuned { log_t } => (ctx.eta / S::lit(4.0) * log_t / ctx.n).sqrt(),
        }
    }

    fn needs_grad(radius: &ConfidenceRadius<S>) -> bool {
        matches!(radius, ConfidenceRadius::Tuned { .. })
    }

    /// Transient divergence of grid point `(theta, xs[j])`, or `Err(partial)` once
    /// the running sum exceeds `budget` (the terms are non-negative).
    fn bounded_transient_divergence(
        &self,
        ctx: &FitContext<S>,
        theta: S,
        j: usize,
        budget: S,
    ) -> std::result::Result<(S, [S; 2]), S> {
        let mut d = S::zero();
        let mut grad = [S::zero(); 2];
        for ((o, &xf), &df) in self
            .transient
            .iter()
            .zip(&ctx.trans_states)
            .zip(&ctx.trans_derivs)
        {
            let (kl, g) = self
                .family
                .kl_with_grad(theta, o.states[j], ctx.fit.theta, xf);
            d = d + kl;
            if d > budget {
                return Err(d);
            }
            grad[0] = grad[0] + g[0];
            grad[1] = grad[1] + g[1] * df;
        }
        Ok((d, grad))
    }

    fn level(&self, ctx: &FitContext<S>, radius: &ConfidenceRadius<S>, s: S) -> S {
        match *radius {
            ConfidenceRadius::Fixed(r) => r,
            ConfidenceRadius::Tuned { log_t } => {
                (s.min(ctx.eta / S::lit(4.0)) * log_t / ctx.n).sqrt()
            }
        }
    }

    /// Maximizes the current mean reward over the divergence ball around the fit.
    ///
    /// `cache` keeps grid divergences between calls with the same fit and data.
    pub(crate) fn ucb(
        &self,
        ctx: &FitContext<S>,
        radius: &ConfidenceRadius<S>,
        cache: &mut UcbCache<S>,
    ) -> UcbResult<S> {
        let nx = self.xs.len();
        let mut best_value = self.family.mean(ctx.fit.theta, ctx.current);
        let mut best = ctx.fit;

        if matches!(radius, ConfidenceRadius::Fixed(r) if *r <= S::zero()) {
            return UcbResult {
                value: best_value,
                argmax: best,
            };
        }

        let key = (self.n_obs, ctx.fit);
        if cache.key != Some(key) {
            cache.key = Some(key);
            cache.rows = vec![None; self.thetas.len()];
            cache.points = vec![PointDivergence::Unknown; self.thetas.len() * nx];
        }

        let mut heap = BinaryHeap::new();
        for (i, &theta) in self.thetas.iter().enumerate() {
            for (j, &x) in self.grid_state.iter().enumerate() {
                let value = self.family.mean(theta, x);
                if value > best_value {
                    heap.push(HeapEntry {
                        value,
                        index: i * nx + j,
                    });
                }
            }
        }
        let cap = self.level_cap(ctx, radius);
        while let Some(HeapEntry { value, index }) = heap.pop() {
            let (i, j) = (index / nx, index % nx);
            let theta = self.thetas[i];
            let (dp, gp) = *cache.rows[i].get_or_insert_with(|| self.pooled_divergence(ctx, theta));
            // Transient terms are non-negative, so the pooled part alone rules out the row.
            if dp / ctx.n > cap {
                continue;
            }
            let (d, s) = match cache.points[index] {
                PointDivergence::Exact { d, s } => (d, s),
                PointDivergence::Lower(lb) if lb / ctx.n > cap => continue,
                _ => match self.bounded_transient_divergence(ctx, theta, j, cap * ctx.n - dp) {
                    Err(partial) => {
                        cache.points[index] = PointDivergence::Lower(partial + dp);
                        continue;
                    }
                    Ok((dt, gt)) => {
                        let d = dt + dp;
                        let s = self.variance(ctx, &[gt[0] + gp[0], gt[1] + gp[1]]);
                        cache.points[index] = PointDivergence::Exact { d, s };
                        (d, s)
                    }
                },
            };
            if d.is_finite() && d / ctx.n <= self.level(ctx, radius, s) {
                best_value = value;
                best = EstimateOrTruth::new(theta, self.xs[j]);
                break;
            }
        }

        if self.search.refine_iters > 0 {
            let want_grad = Self::needs_grad(radius);
            let polished = minimize(
                |p| {
                    let q = self.clamp_point(p);
                    let (d, grad) = self.divergence(ctx, q[0], q[1]);
                    let grad = if want_grad { grad } else { [S::zero(); 2] };
                    if self.feasible(ctx, radius, d, &grad) {
                        -self.family.mean(q[0], self.current_state(q[1]))
                    } else {
                        S::infinity()
                    }
                },
                [best.theta, best.x0],
                self.grid_spacing(),
                self.search.refine_iters,
                S::lit(self.search.refine_tol),
            );
            if -polished.value > best_value {
                let q = self.clamp_point(polished.point);
                best_value = -polished.value;
                best = EstimateOrTruth::new(q[0], q[1]);
            }
        }
        UcbResult {
            value: best_value,
            argmax: best,
        }
    }

    /// Bounds of the x0 search box.
    pub fn x_box(&self) -> Interval<S> {
        self.dynamics.scalar_bounds()
    }
}
