//! Constants of the trajectory-divergence concentration bound.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, RogueError};

/// Constants entering the confidence radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfidenceConfig {
    /// Lipschitz constant of the log-likelihood ratio in `(x, theta)`.
    pub l_f: f64,
    /// Lipschitz constant of the log-likelihood ratio in `r`.
    pub l_p: f64,
    /// Sub-Gaussian parameter of the rewards.
    pub sigma: f64,
    /// Cap on the tuned variance; `None` derives it from the fit.
    #[serde(default)]
    pub eta: Option<f64>,
    pub diam_x: f64,
    pub diam_x_theta: f64,
    pub d_x: usize,
    pub d_theta: usize,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        Self {
            l_f: 1.0,
            l_p: 1.0,
            sigma: 0.5,
            eta: None,
            diam_x: 1.0,
            diam_x_theta: std::f64::consts::SQRT_2,
            d_x: 1,
            d_theta: 1,
        }
    }
}

impl ConfidenceConfig {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("l_f", self.l_f),
            ("l_p", self.l_p),
            ("sigma", self.sigma),
            ("diam_x", self.diam_x),
            ("diam_x_theta", self.diam_x_theta),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return config_err(format!(
                    "confidence.{name} must be positive and finite, got {v}"
                ));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta > 0.0) {
                return config_err(format!("confidence.eta must be positive, got {eta}"));
            }
        }
        if self.d_x == 0 || self.d_theta == 0 {
            return config_err("confidence.d_x and confidence.d_theta must be at least 1");
        }
        Ok(())
    }
}

/// `c_f = 8 L_f diam(X) sqrt(pi) + 48 sqrt(2) 2^{1/(d_x+d_theta)} L_f diam(X x Theta) sqrt(pi (d_x+d_theta))`.
pub fn c_f(cfg: &ConfidenceConfig) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (cfg.d_x + cfg.d_theta) as f64;
    8.0 * cfg.l_f * cfg.diam_x * pi.sqrt()
        + 48.0 * 2f64.sqrt() * 2f64.powf(1.0 / d) * cfg.l_f * cfg.diam_x_theta * (pi * d).sqrt()
}

/// `B(alpha) = c_f / sqrt(ln(1/alpha)) + L_p sigma sqrt(2)` for `alpha in (0, 1)`.
pub fn radius_b(alpha: f64, cfg: &ConfidenceConfig) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RogueError::Domain(format!(
            "tail probability {alpha} outside (0, 1)"
        )));
    }
    Ok(c_f(cfg) / (1.0 / alpha).ln().sqrt() + cfg.l_p * cfg.sigma * 2f64.sqrt())
}

/// `A(t) = B(t^{-4})`, evaluated with `ln(1/alpha) = 4 ln t` so large `t` does not underflow.
pub fn radius_a(t: usize, cfg: &ConfidenceConfig) -> Result<f64> {
    if t < 2 {
        return Err(RogueError::Domain(format!(
            "radius A(t) needs t >= 2, got {t}"
        )));
    }
    let log_inv_alpha = 4.0 * (t as f64).ln();
    Ok(c_f(cfg) / log_inv_alpha.sqrt() + cfg.l_p * cfg.sigma * 2f64.sqrt())
}

/// Constraint level `A(t) sqrt(4 ln t / n)` used by the untuned policy.
pub fn theoretical_radius(t: usize, n: usize, cfg: &ConfidenceConfig) -> Result<f64> {
    if n == 0 {
        return Err(RogueError::Domain(
            "radius needs at least one observation".into(),
        ));
    }
    Ok(radius_a(t, cfg)? * (4.0 * (t as f64).ln() / n as f64).sqrt())
}
