//! Bernoulli rewards with a logistic link on `alpha * theta + beta * x`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Interval;
use crate::error::{config_err, Result};
use crate::scalar::{logistic, softplus, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticGlmParams<S> {
    pub alpha: S,
    pub beta: S,
    pub theta_box: Interval<S>,
}

impl<S: Scalar> LogisticGlmParams<S> {
    pub fn new(alpha: S, beta: S, theta_box: Interval<S>) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return config_err("logistic GLM weights alpha and beta must be finite");
        }
        let theta_box = Interval::new(theta_box.lo, theta_box.hi)?;
        Ok(Self {
            alpha,
            beta,
            theta_box,
        })
    }

    #[inline]
    pub fn linear(&self, theta: S, x: S) -> S {
        self.alpha * theta + self.beta * x
    }
}

/// Mean reward `1 / (1 + exp(-(alpha theta + beta x)))`.
#[inline]
pub fn glm_mean<S: Scalar>(theta: S, x: S, params: &LogisticGlmParams<S>) -> S {
    logistic(params.linear(theta, x))
}

/// One Bernoulli draw.
pub fn glm_sample<S: Scalar, R: Rng + ?Sized>(mean: S, rng: &mut R) -> S {
    let u: f64 = rng.gen();
    if u < mean.as_f64() {
        S::one()
    } else {
        S::zero()
    }
}

/// `KL(Bernoulli(p) || Bernoulli(q))` with `0 ln 0 = 0`; infinite when `q`
/// puts no mass where `p` does.
pub fn bernoulli_kl<S: Scalar>(p: S, q: S) -> S {
    let term = |a: S, b: S| {
        if a <= S::zero() {
            S::zero()
        } else if b <= S::zero() {
            S::infinity()
        } else {
            a * (a / b).ln()
        }
    };
    let kl = term(p, q) + term(S::one() - p, S::one() - q);
    kl.max(S::zero())
}

/// Log-likelihood of a reward `r in [0, 1]` via the linear term, stable for large |z|.
#[inline]
pub(crate) fn log_likelihood<S: Scalar>(r: S, theta: S, x: S, params: &LogisticGlmParams<S>) -> S {
    let z = params.linear(theta, x);
    r * z - softplus(z)
}

/// KL between the Bernoulli laws at two parameter points, computed from the
/// linear terms so saturated means do not lose precision.
#[inline]
pub(crate) fn kl_params<S: Scalar>(
    theta1: S,
    x1: S,
    theta2: S,
    x2: S,
    params: &LogisticGlmParams<S>,
) -> S {
    let z1 = params.linear(theta1, x1);
    let z2 = params.linear(theta2, x2);
    let p = logistic(z1);
    // KL = p (z1 - z2) - softplus(z1) + softplus(z2)
    (p * (z1 - z2) - softplus(z1) + softplus(z2)).max(S::zero())
}

/// KL and its gradient with respect to the second `(theta, x)` pair.
#[inline]
pub(crate) fn kl_with_grad<S: Scalar>(
    theta1: S,
    x1: S,
    theta2: S,
    x2: S,
    params: &LogisticGlmParams<S>,
) -> (S, [S; 2]) {
    let z1 = params.linear(theta1, x1);
    let z2 = params.linear(theta2, x2);
    let p = logistic(z1);
    let q = logistic(z2);
    let kl = (p * (z1 - z2) - softplus(z1) + softplus(z2)).max(S::zero());
    let dz = q - p;
    (kl, [dz * params.alpha, dz * params.beta])
}

/// Per-observation Fisher information in `(theta, x)` coordinates.
#[inline]
pub(crate) fn fisher<S: Scalar>(theta: S, x: S, params: &LogisticGlmParams<S>) -> [[S; 2]; 2] {
    let mu = glm_mean(theta, x, params);
    let w = mu * (S::one() - mu);
    let (a, b) = (params.alpha, params.beta);
    [[w * a * a, w * a * b], [w * a * b, w * b * b]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, beta: f64) -> LogisticGlmParams<f64> {
        LogisticGlmParams::new(alpha, beta, Interval::unit()).unwrap()
    }

    fn independent_logistic(z: f64) -> f64 {
        // series-free evaluation through tanh
        0.5 * (1.0 + (z / 2.0).tanh())
    }

    #[test]
    fn mean_examples() {
        assert_abs_diff_eq!(glm_mean(0.0, 0.0, &params(0.4, 0.6)), 0.5);
        let m0 = glm_mean(0.5, 0.1, &params(0.4, 0.6));
        assert_abs_diff_eq!(m0, independent_logistic(0.26), epsilon = 1e-14);
        assert_abs_diff_eq!(m0, 0.5646, epsilon = 1e-4);
        let m1 = glm_mean(0.7, 0.3, &params(0.7, 0.3));
        assert_abs_diff_eq!(m1, independent_logistic(0.58), epsilon = 1e-14);
        assert_abs_diff_eq!(m1, 0.6411, epsilon = 1e-4);
    }

    #[test]
    fn sample_extremes_and_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!((0..100).all(|_| glm_sample(1.0, &mut rng) == 1.0));
        assert!((0..100).all(|_| glm_sample(0.0, &mut rng) == 0.0));
        let n = 100_000;
        let mean = 0.5646;
        let avg: f64 = (0..n).map(|_| glm_sample(mean, &mut rng)).sum::<f64>() / n as f64;
        assert!((avg - mean).abs() <= 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn bernoulli_kl_examples() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        let hand = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_abs_diff_eq!(bernoulli_kl(0.5, 0.25), hand, epsilon = 1e-15);
        assert_abs_diff_eq!(bernoulli_kl(0.5, 0.25), 0.1438, epsilon = 1e-4);
        assert_abs_diff_eq!(bernoulli_kl(0.25, 0.5), 0.1308, epsilon = 1e-4);
        assert_eq!(bernoulli_kl(0.5, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.0, 0.0), 0.0);
    }

    #[test]
    fn kl_params_matches_bernoulli_kl() {
        let p = params(0.7, -0.4);
        for &(t1, x1, t2, x2) in &[
            (0.1, 0.2, 0.9, 0.4),
            (0.5, 0.5, 0.5, 0.5),
            (1.0, 0.0, 0.0, 1.0),
        ] {
            let direct = bernoulli_kl(glm_mean(t1, x1, &p), glm_mean(t2, x2, &p));
            assert_abs_diff_eq!(kl_params(t1, x1, t2, x2, &p), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn log_likelihood_matches_direct_form() {
        let p = params(0.4, 0.6);
        let mu = glm_mean(0.5, 0.1, &p);
        assert_abs_diff_eq!(log_likelihood(1.0, 0.5, 0.1, &p), mu.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            log_likelihood(0.0, 0.5, 0.1, &p),
            (1.0 - mu).ln(),
            epsilon = 1e-14
        );
    }
}
