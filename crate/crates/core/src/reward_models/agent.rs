//! Utility-maximizing agent with Laplace noise.
//!
//! The agent answers `r = clamp(x + c, 0, 1)` with `c ~ Laplace(0, theta)`,
//! so the reward law has atoms at 0 and 1 and a Laplace density in between:
//!
//! ```text
//! p(r) = 1/2 e^{-x/theta} delta(r) + 1/2 e^{(x-1)/theta} delta(1 - r)
//!        + 1/(2 theta) e^{-|r - x|/theta} 1[0 < r < 1]
//! ```
//!
//! Divergences, gradients and information matrices below are closed forms
//! built from the truncated exponential moments `int_0^a u^k e^{-u/theta} du`.
//! [`agent_kl`] integrates the continuous part numerically and serves as the
//! reference for the closed form.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Interval;
use crate::error::{config_err, Result, RogueError};
use crate::quadrature::adaptive_simpson;
use crate::scalar::Scalar;

/// Default lower end of the noise-scale box.
pub const DEFAULT_THETA_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceAgentParams<S> {
    pub theta_box: Interval<S>,
}

impl<S: Scalar> LaplaceAgentParams<S> {
    pub fn new(theta_box: Interval<S>) -> Result<Self> {
        let theta_box = Interval::new(theta_box.lo, theta_box.hi)?;
        if theta_box.lo <= S::zero() {
            return config_err(format!(
                "agent noise scale box must start above zero, got {}",
                theta_box.lo
            ));
        }
        Ok(Self { theta_box })
    }
}

impl<S: Scalar> Default for LaplaceAgentParams<S> {
    fn default() -> Self {
        Self {
            theta_box: Interval {
                lo: S::lit(DEFAULT_THETA_FLOOR),
                hi: S::one(),
            },
        }
    }
}

/// Expected reward `x + theta/2 (e^{-x/theta} - e^{(x-1)/theta})`.
#[inline]
pub fn agent_mean<S: Scalar>(x: S, theta: S) -> S {
    let half = S::lit(0.5);
    x + theta * half * ((-x / theta).exp() - ((x - S::one()) / theta).exp())
}

/// Masses of the atoms at 0 and 1.
#[inline]
pub fn agent_atoms<S: Scalar>(x: S, theta: S) -> (S, S) {
    let half = S::lit(0.5);
    (
        half * (-x / theta).exp(),
        half * ((x - S::one()) / theta).exp(),
    )
}

/// Density of the continuous part at `r in (0, 1)`.
#[inline]
pub fn agent_density<S: Scalar>(r: S, x: S, theta: S) -> S {
    (-(r - x).abs() / theta).exp() / (S::lit(2.0) * theta)
}

/// Draws `clamp(x + c, 0, 1)` with `c ~ Laplace(0, theta)`.
pub fn agent_sample<S: Scalar, R: Rng + ?Sized>(x: S, theta: S, rng: &mut R) -> S {
    let u: f64 = rng.gen::<f64>() - 0.5;
    let c = -theta.as_f64() * u.signum() * (1.0 - 2.0 * u.abs()).ln();
    S::lit((x.as_f64() + c).clamp(0.0, 1.0))
}

/// Log of the atom mass for `r in {0, 1}`, log-density otherwise.
pub fn agent_log_likelihood<S: Scalar>(r: S, x: S, theta: S) -> Result<S> {
    if !(r >= S::zero() && r <= S::one()) {
        return Err(RogueError::Domain(format!(
            "agent reward {r} outside [0, 1]"
        )));
    }
    Ok(log_likelihood(r, x, theta))
}

#[inline]
pub(crate) fn log_likelihood<S: Scalar>(r: S, x: S, theta: S) -> S {
    let ln_half = -S::LN_2();
    if r <= S::zero() {
        ln_half - x / theta
    } else if r >= S::one() {
        ln_half + (x - S::one()) / theta
    } else {
        -(S::lit(2.0) * theta).ln() - (r - x).abs() / theta
    }
}

/// KL divergence between two agent reward laws; the continuous part is
/// integrated by adaptive Simpson on the pieces between the two kinks.
pub fn agent_kl<S: Scalar>(x1: S, theta1: S, x2: S, theta2: S) -> S {
    let (a1, b1) = agent_atoms(x1, theta1);
    let (a2, b2) = agent_atoms(x2, theta2);
    let atoms = a1 * (a1 / a2).ln() + b1 * (b1 / b2).ln();
    let integrand = |r: S| {
        let f1 = agent_density(r, x1, theta1);
        let log_ratio = (theta2 / theta1).ln() - (r - x1).abs() / theta1 + (r - x2).abs() / theta2;
        f1 * log_ratio
    };
    let mut cuts = vec![S::zero(), x1.min(x2), x1.max(x2), S::one()];
    cuts.dedup();
    let tol = S::lit(1e-12);
    let cont: S = cuts
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], tol))
        .sum();
    (atoms + cont).max(S::zero())
}

/// `[int_0^a e^{-u/theta}, int_0^a u e^{-u/theta}, int_0^a u^2 e^{-u/theta}]`.
#[inline]
fn truncated_moments<S: Scalar>(a: S, theta: S) -> [S; 3] {
    let s = a / theta;
    let e = (-s).exp();
    let one_minus = -(-s).exp_m1();
    let two = S::lit(2.0);
    [
        theta * one_minus,
        theta * theta * (one_minus - s * e),
        theta * theta * theta * (two * one_minus - e * (two * s + s * s)),
    ]
}

/// `(int f, int f (r - x))` over `[lo, hi]`, which must lie on one side of `x`.
#[inline]
fn piece<S: Scalar>(x: S, theta: S, lo: S, hi: S) -> (S, S) {
    let c = S::one() / (S::lit(2.0) * theta);
    if lo >= x {
        let ma = truncated_moments(lo - x, theta);
        let mb = truncated_moments(hi - x, theta);
        (c * (mb[0] - ma[0]), c * (mb[1] - ma[1]))
    } else {
        let ma = truncated_moments(x - hi, theta);
        let mb = truncated_moments(x - lo, theta);
        (c * (mb[0] - ma[0]), -c * (mb[1] - ma[1]))
    }
}

/// For the law at `(x1, theta1)`: `int f |r - c| dr` and the signed mass
/// `P(c < r < 1) - P(0 < r < c)` of the continuous part.
fn abs_moment_about<S: Scalar>(x1: S, theta1: S, c: S) -> (S, S) {
    let lo = x1.min(c);
    let hi = x1.max(c);
    let cuts = [S::zero(), lo, hi, S::one()];
    let mut abs_moment = S::zero();
    let mut signed_mass = S::zero();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (m0, m1) = piece(x1, theta1, w[0], w[1]);
        let sign = if w[0] >= c { S::one() } else { -S::one() };
        abs_moment = abs_moment + sign * (m1 + (x1 - c) * m0);
        signed_mass = signed_mass + sign * m0;
    }
    (abs_moment, signed_mass)
}

/// Closed-form KL divergence; agrees with [`agent_kl`] to quadrature accuracy.
pub fn agent_kl_closed<S: Scalar>(x1: S, theta1: S, x2: S, theta2: S) -> S {
    kl_with_grad(x1, theta1, x2, theta2).0
}

/// KL and its gradient with respect to the second pair, ordered `[theta, x]`.
pub(crate) fn kl_with_grad<S: Scalar>(x1: S, theta1: S, x2: S, theta2: S) -> (S, [S; 2]) {
    let one = S::one();
    let (a1, b1) = agent_atoms(x1, theta1);
    let c1 = one / (S::lit(2.0) * theta1);
    let left = truncated_moments(x1, theta1);
    let right = truncated_moments(one - x1, theta1);
    let mass = c1 * (left[0] + right[0]);
    let self_abs = c1 * (left[1] + right[1]);
    let (cross_abs, signed_mass) = abs_moment_about(x1, theta1, x2);

    let atoms =
        a1 * (-x1 / theta1 + x2 / theta2) + b1 * (-(one - x1) / theta1 + (one - x2) / theta2);
    let cont = (theta2 / theta1).ln() * mass - self_abs / theta1 + cross_abs / theta2;
    let kl = (atoms + cont).max(S::zero());

    let t2sq = theta2 * theta2;
    let score_theta = a1 * x2 / t2sq + b1 * (one - x2) / t2sq - mass / theta2 + cross_abs / t2sq;
    let score_x = (-a1 + b1 + signed_mass) / theta2;
    (kl, [-score_theta, -score_x])
}

/// Per-observation Fisher information, ordered `[theta, x]`.
pub(crate) fn fisher<S: Scalar>(x: S, theta: S) -> [[S; 2]; 2] {
    let one = S::one();
    let (p0, p1) = agent_atoms(x, theta);
    let c = one / (S::lit(2.0) * theta);
    let th2 = theta * theta;
    let th3 = th2 * theta;
    let th4 = th2 * th2;
    let l = truncated_moments(x, theta).map(|m| c * m);
    let r = truncated_moments(one - x, theta).map(|m| c * m);
    // int f g and int f g^2 with g(u) = -1/theta + u/theta^2 on each side
    let fg = |m: [S; 3]| -m[0] / theta + m[1] / th2;
    let fg2 = |m: [S; 3]| m[0] / th2 - S::lit(2.0) * m[1] / th3 + m[2] / th4;

    let i_tt = p0 * x * x / th4 + p1 * (one - x) * (one - x) / th4 + fg2(l) + fg2(r);
    let i_tx = -p0 * x / th3 + p1 * (one - x) / th3 + (fg(r) - fg(l)) / theta;
    let i_xx = one / th2;
    [[i_tt, i_tx], [i_tx, i_xx]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Midpoint-rule reference for integrals over (0, 1).
    fn riemann<F: Fn(f64) -> f64>(f: F, panels: usize) -> f64 {
        let h = 1.0 / panels as f64;
        (0..panels).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    fn riemann_kl(x1: f64, t1: f64, x2: f64, t2: f64, panels: usize) -> f64 {
        let (a1, b1) = agent_atoms(x1, t1);
        let (a2, b2) = agent_atoms(x2, t2);
        let cont = riemann(
            |r| {
                let f1 = agent_density(r, x1, t1);
                f1 * (f1 / agent_density(r, x2, t2)).ln()
            },
            panels,
        );
        a1 * (a1 / a2).ln() + b1 * (b1 / b2).ln() + cont
    }

    #[test]
    fn mean_examples() {
        for theta in [0.05, 0.3, 0.5, 1.0] {
            assert_abs_diff_eq!(agent_mean(0.5, theta), 0.5, epsilon = 1e-15);
        }
        let hand = 0.25 * (1.0 - (-2.0f64).exp());
        assert_abs_diff_eq!(agent_mean(0.0, 0.5), hand, epsilon = 1e-15);
        assert_abs_diff_eq!(agent_mean(0.0, 0.5), 0.2162, epsilon = 1e-4);
        assert_abs_diff_eq!(agent_mean(1.0, 0.5), 0.7838, epsilon = 1e-4);
    }

    #[test]
    fn mean_matches_integrated_reward() {
        for &(x, t) in &[(0.2, 0.1), (0.7, 0.4), (0.0, 1.0)] {
            let (_, b) = agent_atoms(x, t);
            let numeric = b + riemann(|r| r * agent_density(r, x, t), 200_000);
            assert_abs_diff_eq!(agent_mean(x, t), numeric, epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetric_and_bounded() {
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            for theta in [0.05, 0.2, 0.7, 1.0] {
                let g = agent_mean(x, theta);
                assert!((0.0..=1.0).contains(&g));
                assert_abs_diff_eq!(g + agent_mean(1.0 - x, theta), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let avg: f64 = (0..n)
            .map(|_| agent_sample(0.3, 1e-4, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((avg - 0.3).abs() < 0.01);

        let n = 100_000;
        let avg: f64 = (0..n)
            .map(|_| agent_sample(0.5, 0.5, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((avg - 0.5).abs() < 0.01);

        let zeros = (0..n)
            .filter(|_| agent_sample(0.3, 0.5, &mut rng) == 0.0)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5 * (-0.6f64).exp()).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn log_likelihood_examples() {
        assert_abs_diff_eq!(agent_log_likelihood(0.0, 0.0, 0.3).unwrap(), 0.5f64.ln());
        assert_abs_diff_eq!(
            agent_log_likelihood(0.4, 0.4, 0.5).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(agent_log_likelihood(1.2, 0.4, 0.5).is_err());
        assert!(agent_log_likelihood(-0.1, 0.4, 0.5).is_err());
    }

    #[test]
    fn density_normalizes() {
        for i in 0..10 {
            for j in 0..10 {
                let x = i as f64 / 9.0;
                let theta = 0.05 + 0.95 * j as f64 / 9.0;
                let (a, b) = agent_atoms(x, theta);
                let integral = adaptive_simpson(&|r| agent_density(r, x, theta), 0.0, x, 1e-13)
                    + adaptive_simpson(&|r| agent_density(r, x, theta), x, 1.0, 1e-13);
                assert_abs_diff_eq!(a + b + integral, 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn kl_examples() {
        assert!(agent_kl(0.3, 0.5, 0.3, 0.5) <= 1e-10);
        assert!(agent_kl_closed(0.3, 0.5, 0.3, 0.5) <= 1e-12);
        let quad = agent_kl(0.3, 0.5, 0.6, 0.5);
        let oracle = riemann_kl(0.3, 0.5, 0.6, 0.5, 1_000_000);
        assert!(quad > 0.0);
        assert_abs_diff_eq!(quad, oracle, epsilon = 1e-6);
        assert!(agent_kl(0.3, 0.5, 0.4, 0.5) < agent_kl(0.3, 0.5, 0.6, 0.5));
    }

    #[test]
    fn closed_form_kl_matches_quadrature() {
        let cases = [
            (0.3, 0.5, 0.6, 0.5),
            (0.1, 0.05, 0.9, 0.7),
            (0.95, 0.2, 0.0, 0.05),
            (0.5, 1.0, 0.5, 0.1),
            (0.0, 0.3, 1.0, 0.3),
            (0.42, 0.11, 0.47, 0.13),
        ];
        for (x1, t1, x2, t2) in cases {
            let quad = agent_kl(x1, t1, x2, t2);
            let closed = agent_kl_closed(x1, t1, x2, t2);
            assert_abs_diff_eq!(quad, closed, epsilon = 1e-8);
        }
    }

    #[test]
    fn kl_gradient_matches_central_differences() {
        let h = 1e-6;
        for &(x1, t1, x2, t2) in &[
            (0.3, 0.5, 0.6, 0.4),
            (0.8, 0.1, 0.2, 0.3),
            (0.5, 0.2, 0.5, 0.2),
        ] {
            let (_, g) = kl_with_grad(x1, t1, x2, t2);
            let dt = (agent_kl_closed(x1, t1, x2, t2 + h) - agent_kl_closed(x1, t1, x2, t2 - h))
                / (2.0 * h);
            let dx = (agent_kl_closed(x1, t1, x2 + h, t2) - agent_kl_closed(x1, t1, x2 - h, t2))
                / (2.0 * h);
            assert_abs_diff_eq!(g[0], dt, epsilon = 1e-6);
            assert_abs_diff_eq!(g[1], dx, epsilon = 1e-6);
        }
    }

    #[test]
    fn fisher_matches_score_outer_product() {
        for &(x, t) in &[(0.3, 0.5), (0.05, 0.1), (0.9, 0.8)] {
            let info = fisher(x, t);
            let (p0, p1) = agent_atoms(x, t);
            let s0 = [x / (t * t), -1.0 / t];
            let s1 = [(1.0 - x) / (t * t), 1.0 / t];
            let score = |r: f64| [-1.0 / t + (r - x).abs() / (t * t), (r - x).signum() / t];
            let mut reference = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let cont = riemann(
                        |r| agent_density(r, x, t) * score(r)[i] * score(r)[j],
                        400_000,
                    );
                    reference[i][j] = p0 * s0[i] * s0[j] + p1 * s1[i] * s1[j] + cont;
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(
                        info[i][j],
                        reference[i][j],
                        epsilon = 1e-6 * (1.0 + reference[i][j].abs())
                    );
                }
            }
        }
    }
}
