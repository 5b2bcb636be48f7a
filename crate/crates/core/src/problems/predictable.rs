use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::quadratic::QuadraticTracking;
use crate::col::{Bifunction, DecisionForm, Regularity};
use crate::error::{ColError, Result};
use crate::geometry::{dot, norm, DecisionSet, Point};

/// Per-round drift budget a_n (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSchedule {
    Zero,
    /// scale * n^(-exponent)
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl DriftSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            DriftSchedule::Zero => 0.0,
            DriftSchedule::Power { scale, exponent } => scale * (n as f64).powf(-exponent),
        }
    }

    /// A_n = a_1 + ... + a_n.
    pub fn budget(&self, n: usize) -> f64 {
        (1..=n).map(|k| self.at(k)).sum()
    }
}

/// Round-n loss of a predictable sequence: f_{x_n}(.) + <delta_n, .>.
#[derive(Clone, Debug)]
pub struct TiltedRound {
    base: Arc<QuadraticTracking>,
    tilt: Vec<f64>,
    regularity: Regularity,
}

impl TiltedRound {
    pub fn tilt(&self) -> &[f64] {
        &self.tilt
    }
}

impl Bifunction for TiltedRound {
    fn set(&self) -> &DecisionSet {
        self.base.set()
    }

    fn eval(&self, query: &[f64], decision: &[f64]) -> f64 {
        self.base.eval(query, decision) + dot(&self.tilt, decision)
    }

    fn grad(&self, query: &[f64], decision: &[f64]) -> Vec<f64> {
        let mut g = self.base.grad(query, decision);
        for (gi, ti) in g.iter_mut().zip(&self.tilt) {
            *gi += ti;
        }
        g
    }

    fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    fn label(&self) -> String {
        format!("tilted {}", self.base.label())
    }

    fn decision_form(&self, query: &[f64]) -> DecisionForm {
        match self.base.decision_form(query) {
            DecisionForm::Separable {
                curvature,
                mut linear,
                constant,
            } => {
                for (bi, ti) in linear.iter_mut().zip(&self.tilt) {
                    *bi += ti;
                }
                DecisionForm::Separable {
                    curvature,
                    linear,
                    constant,
                }
            }
            DecisionForm::General => DecisionForm::General,
        }
    }

    fn closed_form_best_response(&self, query: &[f64]) -> Option<Point> {
        // argmin (alpha/2)||z - t||^2 + <delta, z> = proj(t - delta / alpha)
        let a = self.base.alpha();
        let t: Vec<f64> = self
            .base
            .target(query)
            .iter()
            .zip(&self.tilt)
            .map(|(ti, di)| ti - di / a)
            .collect();
        Some(Point::from_raw(self.base.set().project_raw(&t)))
    }
}

/// A time-varying problem whose losses drift by exactly a_n per round on top
/// of the COL coupling. The drift path is generated once from the seed.
#[derive(Clone, Debug)]
pub struct PredictableSequence {
    base: Arc<QuadraticTracking>,
    schedule: DriftSchedule,
    rounds: Vec<TiltedRound>,
    regularity: Regularity,
}

impl PredictableSequence {
    pub fn new(
        base: QuadraticTracking,
        schedule: DriftSchedule,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(ColError::InvalidParameter(
                "predictable sequence needs horizon >= 1".into(),
            ));
        }
        if let DriftSchedule::Power { scale, exponent } = schedule {
            if !(scale.is_finite() && scale >= 0.0 && exponent.is_finite()) {
                return Err(ColError::InvalidParameter(format!(
                    "drift schedule scale {scale} / exponent {exponent} invalid"
                )));
            }
        }
        let base = Arc::new(base);
        let d = base.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut delta = vec![0.0; d];
        let mut tilts = Vec::with_capacity(horizon);
        let mut max_tilt: f64 = 0.0;
        for n in 1..=horizon {
            let a = schedule.at(n);
            if a > 0.0 {
                let u = unit_vector(d, &mut rng);
                for (di, ui) in delta.iter_mut().zip(&u) {
                    *di += a * ui;
                }
            }
            max_tilt = max_tilt.max(norm(&delta));
            tilts.push(delta.clone());
        }
        let mut regularity = *base.regularity();
        regularity.grad_bound += max_tilt;
        let rounds = tilts
            .into_iter()
            .map(|tilt| TiltedRound {
                base: Arc::clone(&base),
                tilt,
                regularity,
            })
            .collect();
        Ok(PredictableSequence {
            base,
            schedule,
            rounds,
            regularity,
        })
    }

    pub fn base(&self) -> &QuadraticTracking {
        &self.base
    }

    pub fn schedule(&self) -> DriftSchedule {
        self.schedule
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    /// Loss of round n (1-based).
    pub fn round(&self, n: usize) -> Result<&TiltedRound> {
        n.checked_sub(1)
            .and_then(|i| self.rounds.get(i))
            .ok_or_else(|| {
                ColError::InvalidParameter(format!("round {n} outside 1..={}", self.rounds.len()))
            })
    }
}

fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist;

    fn base() -> QuadraticTracking {
        QuadraticTracking::new(
            2.0,
            0.2,
            Point::zeros(2),
            DecisionSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_budget_is_the_base_problem() {
        let seq = PredictableSequence::new(base(), DriftSchedule::Zero, 10, 1).unwrap();
        let r = seq.round(7).unwrap();
        assert_eq!(
            r.eval(&[0.3, 0.1], &[0.5, -0.5]),
            base().eval(&[0.3, 0.1], &[0.5, -0.5])
        );
    }

    #[test]
    fn increments_have_norm_a_n() {
        let sched = DriftSchedule::Power {
            scale: 1.0,
            exponent: 0.5,
        };
        let seq = PredictableSequence::new(base(), sched, 50, 3).unwrap();
        for n in 2..=50 {
            let step = dist(
                seq.round(n).unwrap().tilt(),
                seq.round(n - 1).unwrap().tilt(),
            );
            assert!((step - sched.at(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn budgets() {
        let sq = DriftSchedule::Power {
            scale: 1.0,
            exponent: 2.0,
        };
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        // tail of sum 1/k^2 beyond n is below 1/n
        assert!((zeta2 - sq.budget(10_000)) < 1e-4 && sq.budget(10_000) < zeta2);
        let half = DriftSchedule::Power {
            scale: 1.0,
            exponent: 0.5,
        };
        let n = 10_000;
        let a = half.budget(n);
        assert!(a <= 2.0 * (n as f64).sqrt() && a >= 2.0 * ((n + 1) as f64).sqrt() - 2.0);
    }

    #[test]
    fn tilted_best_response_minimizes() {
        let seq = PredictableSequence::new(
            base(),
            DriftSchedule::Power {
                scale: 0.7,
                exponent: 0.0,
            },
            5,
            2,
        )
        .unwrap();
        let r = seq.round(5).unwrap();
        let x = [0.4, -0.3];
        let br = r.closed_form_best_response(&x).unwrap();
        let grid = r.set().grid(201).unwrap();
        let best = grid
            .iter()
            .map(|z| r.eval(&x, z))
            .fold(f64::INFINITY, f64::min);
        assert!(r.eval(&x, &br) <= best + 1e-12);
    }

    #[test]
    fn round_zero_rejected() {
        let seq = PredictableSequence::new(base(), DriftSchedule::Zero, 3, 0).unwrap();
        assert!(seq.round(0).is_err() && seq.round(4).is_err());
    }
}
