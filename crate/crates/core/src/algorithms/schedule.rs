use serde::{Deserialize, Serialize};

use crate::col::Regularity;
use crate::error::{ColError, Result};

/// Step-size rule, possibly defined through the problem's constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant {
        eta: f64,
    },
    /// scale / sqrt(n)
    InvSqrt {
        scale: f64,
    },
    /// (alpha - beta) / (L (gamma + beta)^2): the rate-optimal constant step
    /// for mirror descent on an (alpha, beta)-regular problem.
    ContractionOptimal,
    /// alpha / (2 L gamma^2), the constant step for predictable problems.
    Predictable,
}

/// A schedule with every constant resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    InvSqrt(f64),
}

impl Schedule {
    /// eta_n for round n >= 1.
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Schedule::Constant(eta) => eta,
            Schedule::InvSqrt(scale) => scale / (n as f64).sqrt(),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match *self {
            Schedule::Constant(eta) => Some(eta),
            Schedule::InvSqrt(_) => None,
        }
    }
}

impl StepSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            StepSchedule::Constant { .. } => "constant",
            StepSchedule::InvSqrt { .. } => "inv_sqrt",
            StepSchedule::ContractionOptimal => "contraction_optimal",
            StepSchedule::Predictable => "predictable",
        }
    }

    /// `smoothness` is L of the mirror map, `None` when unbounded.
    pub fn resolve(&self, reg: &Regularity, smoothness: Option<f64>) -> Result<Schedule> {
        let needs_l = || {
            smoothness.ok_or_else(|| {
                ColError::InvalidParameter(format!(
                    "{} step size needs a smooth mirror map",
                    self.name()
                ))
            })
        };
        let s = match *self {
            StepSchedule::Constant { eta } => Schedule::Constant(eta),
            StepSchedule::InvSqrt { scale } => Schedule::InvSqrt(scale),
            StepSchedule::ContractionOptimal => {
                if reg.alpha <= reg.beta {
                    return Err(ColError::InvalidParameter(format!(
                        "contraction_optimal step needs alpha > beta (alpha {}, beta {})",
                        reg.alpha, reg.beta
                    )));
                }
                let l = needs_l()?;
                Schedule::Constant((reg.alpha - reg.beta) / (l * (reg.gamma + reg.beta).powi(2)))
            }
            StepSchedule::Predictable => {
                let l = needs_l()?;
                if reg.gamma <= 0.0 {
                    return Err(ColError::InvalidParameter(
                        "predictable step needs gamma > 0".into(),
                    ));
                }
                Schedule::Constant(reg.alpha / (2.0 * l * reg.gamma * reg.gamma))
            }
        };
        let v = match s {
            Schedule::Constant(v) | Schedule::InvSqrt(v) => v,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(ColError::InvalidParameter(format!(
                "step size {v} must be finite and > 0"
            )));
        }
        Ok(s)
    }
}
