//! Projected-linear arm dynamics.
//!
//! Every arm carries a hidden state that moves by
//! `x' = proj_X(A x + B u + K)` where `u` is 1 when the arm was pulled on the
//! step and 0 otherwise. The projection saturates the state inside an
//! axis-aligned box, so repeated pulls drive the state towards one face
//! (habituation) and rest drives it towards another (recovery).

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::Scalar;

/// Slack allowed above 1 when validating the spectral norm of `A`.
pub const SPECTRAL_NORM_SLACK: f64 = 1e-9;

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return config_err(format!("interval [{lo}, {hi}] must satisfy lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: S::zero(),
            hi: S::one(),
        }
    }

    #[inline]
    pub fn clamp(&self, v: S) -> S {
        v.max(self.lo).min(self.hi)
    }

    #[inline]
    pub fn contains(&self, v: S) -> bool {
        v >= self.lo && v <= self.hi
    }

    #[inline]
    pub fn width(&self) -> S {
        self.hi - self.lo
    }

    /// `n` evenly spaced points including both end points (`n >= 2`).
    pub fn grid(&self, n: usize) -> Vec<S> {
        assert!(n >= 2, "grid needs at least two points");
        let step = self.width() / S::from_count(n - 1);
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.hi
                } else {
                    self.lo + step * S::from_count(i)
                }
            })
            .collect()
    }
}

/// Axis-aligned box `X = [lower_1, upper_1] x ... x [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> StateBox<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return config_err("state box bounds must have equal, non-zero length");
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite()) || l >= u {
                return config_err(format!(
                    "state box coordinate {i}: lower {l} must be below upper {u}"
                ));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn scalar(bounds: Interval<S>) -> Self {
        Self {
            lower: vec![bounds.lo],
            upper: vec![bounds.hi],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    /// Coordinate `i` as an interval.
    pub fn axis(&self, i: usize) -> Interval<S> {
        Interval {
            lo: self.lower[i],
            hi: self.upper[i],
        }
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Euclidean projection onto the box, i.e. a coordinatewise clamp.
    pub fn project(&self, x: &[S]) -> Vec<S> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.max(*l).min(*u))
            .collect()
    }

    /// Euclidean diameter `max ||x - y||`.
    pub fn diameter(&self) -> S {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (*u - *l) * (*u - *l))
            .sum::<S>()
            .sqrt()
    }
}

/// Projects `x` onto `bounds`.
pub fn project<S: Scalar>(x: &[S], bounds: &StateBox<S>) -> Result<Vec<S>> {
    if x.len() != bounds.dim() {
        return config_err(format!(
            "state has dimension {} but the box has dimension {}",
            x.len(),
            bounds.dim()
        ));
    }
    Ok(bounds.project(x))
}

/// Known dynamics `(A, B, K, X)` of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsParams<S> {
    a: SquareMatrix<S>,
    b: Vec<S>,
    k: Vec<S>,
    state_box: StateBox<S>,
}

impl<S: Scalar> DynamicsParams<S> {
    pub fn new(a: SquareMatrix<S>, b: Vec<S>, k: Vec<S>, state_box: StateBox<S>) -> Result<Self> {
        let d = state_box.dim();
        if a.dim() != d || b.len() != d || k.len() != d {
            return config_err(format!(
                "dynamics dimensions disagree: A is {0}x{0}, B has {1}, K has {2}, box has {3}",
                a.dim(),
                b.len(),
                k.len(),
                d
            ));
        }
        if a.as_slice()
            .iter()
            .chain(&b)
            .chain(&k)
            .any(|v| !v.is_finite())
        {
            return config_err("dynamics entries must be finite");
        }
        let norm = a.spectral_norm();
        if norm > S::one() + S::lit(SPECTRAL_NORM_SLACK) {
            return config_err(format!("spectral norm of A is {norm}, must be at most 1"));
        }
        Ok(Self { a, b, k, state_box })
    }

    /// Scalar dynamics `x' = clamp(a x + b u + k, bounds)`.
    pub fn scalar(a: S, b: S, k: S, bounds: Interval<S>) -> Result<Self> {
        Self::new(
            SquareMatrix::from_row_major(vec![a]).expect("1x1"),
            vec![b],
            vec![k],
            StateBox::scalar(bounds),
        )
    }

    /// `A = 1, B = 0, K = 0` on `bounds`.
    pub fn identity(bounds: Interval<S>) -> Self {
        Self::scalar(S::one(), S::zero(), S::zero(), bounds).expect("identity dynamics are valid")
    }

    pub fn dim(&self) -> usize {
        self.state_box.dim()
    }

    pub fn a(&self) -> &SquareMatrix<S> {
        &self.a
    }

    pub fn b(&self) -> &[S] {
        &self.b
    }

    pub fn k(&self) -> &[S] {
        &self.k
    }

    pub fn state_box(&self) -> &StateBox<S> {
        &self.state_box
    }

    /// One transition `proj_X(A x + B u + K)`.
    pub fn step(&self, x: &[S], chosen: bool) -> Result<Vec<S>> {
        if x.len() != self.dim() {
            return config_err(format!(
                "state has dimension {} but dynamics have dimension {}",
                x.len(),
                self.dim()
            ));
        }
        let u = if chosen { S::one() } else { S::zero() };
        let ax = self.a.mul_vec(x);
        let raw: Vec<S> = ax
            .iter()
            .zip(self.b.iter().zip(&self.k))
            .map(|(ax, (b, k))| *ax + *b * u + *k)
            .collect();
        Ok(self.state_box.project(&raw))
    }

    /// `[x0, x1, ..., x_t]` for `t = actions.len()`.
    pub fn rollout(&self, x0: &[S], actions: &[bool]) -> Result<Vec<Vec<S>>> {
        let mut out = Vec::with_capacity(actions.len() + 1);
        let first = project(x0, &self.state_box)?;
        if first != x0 {
            return config_err("initial state lies outside the state box");
        }
        out.push(first);
        for &u in actions {
            let next = self.step(out.last().expect("non-empty"), u)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Scalar fast path; only meaningful when `dim() == 1`.
    #[inline]
    pub fn step_scalar(&self, x: S, chosen: bool) -> S {
        debug_assert_eq!(self.dim(), 1);
        let raw = self.raw_scalar(x, chosen);
        raw.max(self.state_box.lower[0])
            .min(self.state_box.upper[0])
    }

    /// Scalar step together with the derivative of the new state with respect
    /// to the initial state, given the derivative `dx` of the current state.
    /// A saturated coordinate is locally constant, so its derivative is zero.
    #[inline]
    pub fn step_scalar_with_derivative(&self, x: S, dx: S, chosen: bool) -> (S, S) {
        let raw = self.raw_scalar(x, chosen);
        let (lo, hi) = (self.state_box.lower[0], self.state_box.upper[0]);
        if raw <= lo {
            (lo, S::zero())
        } else if raw >= hi {
            (hi, S::zero())
        } else {
            (raw, self.a.get(0, 0) * dx)
        }
    }

    #[inline]
    fn raw_scalar(&self, x: S, chosen: bool) -> S {
        let u = if chosen { self.b[0] } else { S::zero() };
        self.a.get(0, 0) * x + u + self.k[0]
    }

    /// Scalar state bounds; only meaningful when `dim() == 1`.
    pub fn scalar_bounds(&self) -> Interval<S> {
        self.state_box.axis(0)
    }

    /// Scalar rollout together with `d x_s / d x0` for every state.
    pub fn rollout_scalar_with_derivative(&self, x0: S, actions: &[bool]) -> (Vec<S>, Vec<S>) {
        let mut xs = Vec::with_capacity(actions.len() + 1);
        let mut ds = Vec::with_capacity(actions.len() + 1);
        let (mut x, mut d) = (x0, S::one());
        xs.push(x);
        ds.push(d);
        for &u in actions {
            (x, d) = self.step_scalar_with_derivative(x, d, u);
            xs.push(x);
            ds.push(d);
        }
        (xs, ds)
    }

    /// Scalar rollout returning `[x0, ..., x_t]`.
    pub fn rollout_scalar(&self, x0: S, actions: &[bool]) -> Vec<S> {
        let mut out = Vec::with_capacity(actions.len() + 1);
        let mut x = x0;
        out.push(x);
        for &u in actions {
            x = self.step_scalar(x, u);
            out.push(x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn benchmark_action0() -> DynamicsParams<f64> {
        DynamicsParams::scalar(0.6, -1.0, 0.5, Interval::unit()).unwrap()
    }

    #[test]
    fn project_examples() {
        let unit = StateBox::scalar(Interval::<f64>::unit());
        assert_eq!(project(&[0.56], &unit).unwrap(), vec![0.56]);
        assert_eq!(project(&[-0.44], &unit).unwrap(), vec![0.0]);
        assert_eq!(project(&[1.7], &unit).unwrap(), vec![1.0]);
    }

    #[test]
    fn malformed_box_is_rejected() {
        assert!(StateBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(StateBox::new(vec![0.5], vec![0.5]).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn step_examples() {
        let d = benchmark_action0();
        assert_abs_diff_eq!(d.step(&[0.1], true).unwrap()[0], 0.0);
        assert_abs_diff_eq!(d.step(&[0.1], false).unwrap()[0], 0.56, epsilon = 1e-15);
        let id = DynamicsParams::identity(Interval::unit());
        assert_eq!(id.step(&[0.37], true).unwrap(), vec![0.37]);
        assert_eq!(id.step(&[0.37], false).unwrap(), vec![0.37]);
    }

    #[test]
    fn step_dimension_mismatch() {
        assert!(benchmark_action0().step(&[0.1, 0.2], true).is_err());
    }

    #[test]
    fn rollout_examples() {
        let d = benchmark_action0();
        assert_eq!(d.rollout(&[0.1], &[]).unwrap(), vec![vec![0.1]]);
        let r = d.rollout(&[0.1], &[true, false]).unwrap();
        assert_eq!(r.len(), 3);
        assert_abs_diff_eq!(r[1][0], 0.0);
        assert_abs_diff_eq!(r[2][0], 0.5, epsilon = 1e-15);
        let id = DynamicsParams::identity(Interval::unit());
        let r = id.rollout(&[0.2], &[true, false, true]).unwrap();
        assert!(r.iter().all(|x| x[0] == 0.2));
    }

    #[test]
    fn spectral_norm_validation() {
        assert!(DynamicsParams::scalar(1.0 + 1e-10, 0.0, 0.0, Interval::unit()).is_ok());
        assert!(DynamicsParams::scalar(1.01, 0.0, 0.0, Interval::unit()).is_err());
        assert!(DynamicsParams::scalar(-0.9, 0.0, 0.0, Interval::unit()).is_ok());
        let a = SquareMatrix::from_rows(&[vec![0.9, 0.5], vec![0.0, 0.9]]).unwrap();
        let bx = StateBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(DynamicsParams::new(a, vec![0.0; 2], vec![0.0; 2], bx).is_err());
    }

    #[test]
    fn two_dimensional_step() {
        let a = SquareMatrix::from_rows(&[vec![0.5, 0.2], vec![-0.1, 0.4]]).unwrap();
        let bx = StateBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let d = DynamicsParams::new(a, vec![0.3, -0.5], vec![0.1, 0.2], bx).unwrap();
        let x = d.step(&[0.8, 0.5], true).unwrap();
        assert_abs_diff_eq!(x[0], 0.4 + 0.1 + 0.3 + 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], -0.08 + 0.2 - 0.5 + 0.2, epsilon = 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let d = DynamicsParams::<f32>::scalar(0.6, -1.0, 0.5, Interval::unit()).unwrap();
        let r = d.rollout_scalar(0.1, &[true, false]);
        assert!((r[2] - 0.5).abs() < 1e-6);
    }

    fn arb_dynamics() -> impl Strategy<Value = DynamicsParams<f64>> {
        (-1.0f64..=1.0, -1.5f64..1.5, -1.0f64..1.0)
            .prop_map(|(a, b, k)| DynamicsParams::scalar(a, b, k, Interval::unit()).unwrap())
    }

    proptest! {
        #[test]
        fn states_stay_in_box(d in arb_dynamics(), x0 in 0.0f64..=1.0,
                              acts in prop::collection::vec(any::<bool>(), 0..40)) {
            for x in d.rollout(&[x0], &acts).unwrap() {
                prop_assert!(d.state_box().contains(&x));
            }
        }

        #[test]
        fn step_is_non_expansive(d in arb_dynamics(), x in 0.0f64..=1.0, y in 0.0f64..=1.0, u in any::<bool>()) {
            let fx = d.step_scalar(x, u);
            let fy = d.step_scalar(y, u);
            prop_assert!((fx - fy).abs() <= (x - y).abs() + 1e-15);
        }

        #[test]
        fn project_is_idempotent(v in prop::collection::vec(-3.0f64..3.0, 2)) {
            let bx = StateBox::new(vec![0.0, -1.0], vec![1.0, 0.5]).unwrap();
            let p = bx.project(&v);
            prop_assert_eq!(bx.project(&p), p);
        }

        #[test]
        fn rollout_composes(d in arb_dynamics(), x0 in 0.0f64..=1.0,
                            s1 in prop::collection::vec(any::<bool>(), 0..20),
                            s2 in prop::collection::vec(any::<bool>(), 0..20)) {
            let joined: Vec<bool> = s1.iter().chain(&s2).copied().collect();
            let full = d.rollout(&[x0], &joined).unwrap();
            let first = d.rollout(&[x0], &s1).unwrap();
            let second = d.rollout(first.last().unwrap(), &s2).unwrap();
            prop_assert_eq!(&full[s1.len()..], &second[..]);
        }
    }
}
