use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{ColError, Result};

/// Row-stochastic S x A matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    states: usize,
    actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(states: usize, actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != states * actions {
            return Err(ColError::DimensionMismatch {
                expected: states * actions,
                found: probs.len(),
            });
        }
        for (s, row) in probs.chunks(actions).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-12 {
                return Err(ColError::InvalidParameter(format!(
                    "policy row {s} is not a distribution"
                )));
            }
        }
        Ok(Policy {
            states,
            actions,
            probs,
        })
    }

    pub fn uniform(states: usize, actions: usize) -> Self {
        Policy {
            states,
            actions,
            probs: vec![1.0 / actions as f64; states * actions],
        }
    }

    /// Each row drawn from Dirichlet(1), so almost surely in the interior.
    pub fn random(states: usize, actions: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probs = Vec::with_capacity(states * actions);
        for _ in 0..states {
            let e: Vec<f64> = (0..actions).map(|_| Exp1.sample(&mut rng)).collect();
            let z: f64 = e.iter().sum();
            probs.extend(e.into_iter().map(|v| v / z));
        }
        Policy {
            states,
            actions,
            probs,
        }
    }

    /// Deterministic policy choosing `choice[s]` in state s.
    pub fn deterministic(actions: usize, choice: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; choice.len() * actions];
        for (s, &a) in choice.iter().enumerate() {
            if a >= actions {
                return Err(ColError::InvalidParameter(format!(
                    "action {a} out of range"
                )));
            }
            probs[s * actions + a] = 1.0;
        }
        Ok(Policy {
            states: choice.len(),
            actions,
            probs,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.actions..(s + 1) * self.actions]
    }
}
