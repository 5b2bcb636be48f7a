use serde::{Deserialize, Serialize};

use crate::error::{ColError, Result};

/// Which constants are backed by analysis rather than sampling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certified {
    pub alpha: bool,
    pub beta: bool,
    pub gamma: bool,
    pub grad_bound: bool,
}

impl Certified {
    pub const ALL: Certified = Certified {
        alpha: true,
        beta: true,
        gamma: true,
        grad_bound: true,
    };
    pub const NONE: Certified = Certified {
        alpha: false,
        beta: false,
        gamma: false,
        grad_bound: false,
    };
}

/// Regularity constants of a bifunction: f_x is alpha-strongly convex and
/// gamma-smooth, x -> grad f_x(z) is beta-Lipschitz, and gradients on the set
/// are bounded by `grad_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub grad_bound: f64,
    pub known: Certified,
}

impl Regularity {
    pub fn certified(alpha: f64, beta: f64, gamma: f64, grad_bound: f64) -> Result<Self> {
        let r = Regularity {
            alpha,
            beta,
            gamma,
            grad_bound,
            known: Certified::ALL,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("grad_bound", self.grad_bound),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ColError::InvalidParameter(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        if self.known.alpha && self.known.gamma && self.gamma < self.alpha {
            return Err(ColError::InvalidParameter(format!(
                "certified gamma {} is below certified alpha {}",
                self.gamma, self.alpha
            )));
        }
        Ok(())
    }

    /// beta / alpha, the contraction factor of the best-response map.
    pub fn difficulty(&self) -> f64 {
        if self.alpha == 0.0 {
            f64::INFINITY
        } else {
            self.beta / self.alpha
        }
    }

    /// alpha > beta with both constants certified.
    pub fn certified_contractive(&self) -> bool {
        self.known.alpha && self.known.beta && self.alpha > self.beta
    }

    /// Per-step contraction factor of mirror descent with constant step `eta`
    /// under an L-smooth mirror map.
    pub fn mirror_descent_rate(&self, eta: f64, l: f64) -> f64 {
        1.0 - 2.0 * eta * (self.alpha - self.beta) / l
            + eta * eta * (self.gamma + self.beta).powi(2)
    }

    /// Upper end of the step-size range with rate below one.
    pub fn mirror_descent_threshold(&self, l: f64) -> f64 {
        2.0 * (self.alpha - self.beta) / (l * (self.gamma + self.beta).powi(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_threshold_for_the_tracking_family() {
        // alpha = 2, lambda = 0.5: beta = 1, gamma = 2, L = 1
        let r = Regularity::certified(2.0, 1.0, 2.0, 1.0).unwrap();
        assert!((r.mirror_descent_threshold(1.0) - 2.0 / 9.0).abs() < 1e-15);
        assert!((r.mirror_descent_rate(0.2, 1.0) - 0.96).abs() < 1e-12);
        assert!((r.difficulty() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_below_alpha_rejected() {
        assert!(Regularity::certified(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(Regularity::certified(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }
}
