use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bifunction::Bifunction;
use crate::error::{ColError, Result};
use crate::geometry::norm;

/// Zero-mean stochastic part of the feedback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Isotropic Gaussian, standard deviation `sigma` per coordinate.
    Gaussian { sigma: f64 },
    /// The problem's own unbiased gradient sampler.
    Native,
}

/// Norm of the adversarial bias at round n (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BiasSchedule {
    Zero,
    /// kappa / n, summable in the log sense.
    Decaying {
        kappa: f64,
    },
    /// kappa every round.
    Constant {
        kappa: f64,
    },
}

impl BiasSchedule {
    pub fn magnitude(&self, n: usize) -> f64 {
        match *self {
            BiasSchedule::Zero => 0.0,
            BiasSchedule::Decaying { kappa } => kappa / n as f64,
            BiasSchedule::Constant { kappa } => kappa,
        }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            BiasSchedule::Zero => 0.0,
            BiasSchedule::Decaying { kappa } | BiasSchedule::Constant { kappa } => kappa,
        }
    }

    /// Cumulative bias budget over rounds 1..=n.
    pub fn total(&self, n: usize) -> f64 {
        (1..=n).map(|k| self.magnitude(k)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adversary {
    pub schedule: BiasSchedule,
    /// Bias direction; normalized internally. Defaults to the first basis vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum FeedbackSpec {
    #[default]
    Deterministic,
    Stochastic(NoiseModel),
    Adversarial(Adversary),
    Combined(NoiseModel, Adversary),
}

impl FeedbackSpec {
    pub fn noise(&self) -> Option<&NoiseModel> {
        match self {
            FeedbackSpec::Stochastic(n) | FeedbackSpec::Combined(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn adversary(&self) -> Option<&Adversary> {
        match self {
            FeedbackSpec::Adversarial(a) | FeedbackSpec::Combined(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.noise(), None)
            && self
                .adversary()
                .is_none_or(|a| a.schedule == BiasSchedule::Zero)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Some(NoiseModel::Gaussian { sigma }) = self.noise() {
            if !(sigma.is_finite() && *sigma >= 0.0) {
                return Err(ColError::InvalidParameter(format!(
                    "noise sigma {sigma} must be >= 0"
                )));
            }
        }
        if let Some(adv) = self.adversary() {
            let k = adv.schedule.kappa();
            if !(k.is_finite() && k >= 0.0) {
                return Err(ColError::InvalidParameter(format!(
                    "bias kappa {k} must be >= 0"
                )));
            }
            if let Some(d) = &adv.direction {
                if d.len() != dim {
                    return Err(ColError::DimensionMismatch {
                        expected: dim,
                        found: d.len(),
                    });
                }
                if !(norm(d) > 0.0 && norm(d).is_finite()) {
                    return Err(ColError::InvalidParameter(
                        "bias direction must be a nonzero vector".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// First-order feedback for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub gradient: Vec<f64>,
    /// Norm of the adversarial bias added this round.
    pub xi_norm: f64,
}

/// Per-run feedback stream: owns its RNG so runs never share state.
pub struct FeedbackChannel {
    spec: FeedbackSpec,
    direction: Vec<f64>,
    rng: ChaCha8Rng,
}

impl FeedbackChannel {
    pub fn new(spec: FeedbackSpec, dim: usize, seed: u64) -> Result<Self> {
        spec.validate(dim)?;
        let direction = match spec.adversary().and_then(|a| a.direction.clone()) {
            Some(d) => {
                let n = norm(&d);
                d.into_iter().map(|v| v / n).collect()
            }
            None => {
                let mut e = vec![0.0; dim];
                if dim > 0 {
                    e[0] = 1.0;
                }
                e
            }
        };
        Ok(FeedbackChannel {
            spec,
            direction,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn spec(&self) -> &FeedbackSpec {
        &self.spec
    }

    /// g_n = grad l_n(x_n) + eps_n + xi_n.
    pub fn observe(&mut self, loss: &dyn Bifunction, n: usize, x: &[f64]) -> Result<Observation> {
        let mut g = match self.spec.noise() {
            None => loss.grad(x, x),
            Some(NoiseModel::Gaussian { sigma }) => {
                let mut g = loss.grad(x, x);
                for gi in g.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    *gi += sigma * z;
                }
                g
            }
            Some(NoiseModel::Native) => {
                loss.sample_gradient(x, x, &mut self.rng).ok_or_else(|| {
                    ColError::InvalidParameter(format!(
                        "{} has no native gradient sampler",
                        loss.label()
                    ))
                })?
            }
        };
        let mut xi_norm = 0.0;
        if let Some(adv) = self.spec.adversary() {
            let b = adv.schedule.magnitude(n);
            if b > 0.0 {
                for (gi, di) in g.iter_mut().zip(&self.direction) {
                    *gi += b * di;
                }
                xi_norm = b;
            }
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(ColError::NonFinite);
        }
        Ok(Observation {
            gradient: g,
            xi_norm,
        })
    }
}
