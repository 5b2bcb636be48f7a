use crate::algorithms::Environment;
use crate::col::{Bifunction, DecisionForm};
use crate::error::{ColError, Result};
use crate::geometry::{DecisionSet, Point};

use super::trace::RunTrace;

const MAX_ITERATIONS: usize = 100_000;

/// Running weighted sum of round losses, z -> sum_n w_n l_n(z), with its
/// minimum over the set. Separable rounds are folded into one closed-form
/// quadratic; any general round switches to an iterative solve over the
/// recorded queries.
pub struct CumulativeLoss<'a> {
    set: DecisionSet,
    curvature: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
    general: Vec<(&'a dyn Bifunction, Point, f64)>,
}

impl<'a> CumulativeLoss<'a> {
    pub fn new(set: &DecisionSet) -> Self {
        let d = set.dim();
        CumulativeLoss {
            set: set.clone(),
            curvature: vec![0.0; d],
            linear: vec![0.0; d],
            constant: 0.0,
            general: Vec::new(),
        }
    }

    pub fn add(&mut self, loss: &'a dyn Bifunction, query: &Point, weight: f64) {
        match loss.decision_form(query) {
            DecisionForm::Separable {
                curvature,
                linear,
                constant,
            } => {
                for i in 0..curvature.len() {
                    self.curvature[i] += weight * curvature[i];
                    self.linear[i] += weight * linear[i];
                }
                self.constant += weight * constant;
            }
            DecisionForm::General => self.general.push((loss, query.clone(), weight)),
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let mut v = self.constant;
        for i in 0..z.len() {
            v += 0.5 * self.curvature[i] * z[i] * z[i] + self.linear[i] * z[i];
        }
        v + self
            .general
            .iter()
            .map(|(l, q, w)| w * l.eval(q, z))
            .sum::<f64>()
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = (0..z.len())
            .map(|i| self.curvature[i] * z[i] + self.linear[i])
            .collect();
        for (l, q, w) in &self.general {
            for (gi, hi) in g.iter_mut().zip(l.grad(q, z)) {
                *gi += w * hi;
            }
        }
        g
    }

    /// Minimizer and minimum value of the cumulative loss.
    pub fn minimize(&self, tol: f64) -> Result<(Point, f64)> {
        if self.general.is_empty() {
            if let Some(z) = self
                .set
                .minimize_separable_quadratic(&self.curvature, &self.linear)
            {
                let v = self.value(&z);
                return Ok((z, v));
            }
        }
        self.minimize_iteratively(tol)
    }

    fn minimize_iteratively(&self, tol: f64) -> Result<(Point, f64)> {
        let mut lip = self.curvature.iter().cloned().fold(1e-3, f64::max);
        let mut z = self.set.center().into_vec();
        let mut fz = self.value(&z);
        for _ in 0..MAX_ITERATIONS {
            let g = self.gradient(&z);
            let (next, f_next) = loop {
                let trial: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
                let next = self.set.project_raw(&trial);
                let f_next = self.value(&next);
                let step_sq: f64 = next.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum();
                let lin: f64 = next
                    .iter()
                    .zip(&z)
                    .zip(&g)
                    .map(|((a, b), gi)| gi * (a - b))
                    .sum();
                if f_next <= fz + lin + 0.5 * lip * step_sq + 1e-14 * (1.0 + fz.abs()) || lip > 1e15
                {
                    break (next, f_next);
                }
                lip *= 2.0;
            };
            let moved: f64 = next
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            z = next;
            fz = f_next;
            if lip * moved <= tol {
                return Ok((Point::new(z)?, fz));
            }
        }
        Err(ColError::NonConvergence {
            iterations: MAX_ITERATIONS,
            residual: fz,
        })
    }
}

/// Cumulative dynamic regret over the first `up_to` rounds.
pub fn dynamic_regret(trace: &RunTrace, up_to: usize) -> f64 {
    trace.rows.iter().take(up_to).map(|r| r.gap).sum()
}

/// Static regret against `comparator`, or against the best fixed decision in
/// hindsight when none is given. Losses are re-queried at the recorded
/// iterates, so the trace must come from `env`.
pub fn static_regret(
    trace: &RunTrace,
    env: &Environment<'_>,
    comparator: Option<&[f64]>,
    tol: f64,
) -> Result<f64> {
    weighted_static_regret_inner(trace, env, None, comparator, tol)
}

/// sum w_n l_n(x_n) - min_x sum w_n l_n(x).
pub fn weighted_static_regret(
    trace: &RunTrace,
    env: &Environment<'_>,
    weights: &[f64],
    tol: f64,
) -> Result<f64> {
    weighted_static_regret_inner(trace, env, Some(weights), None, tol)
}

fn weighted_static_regret_inner(
    trace: &RunTrace,
    env: &Environment<'_>,
    weights: Option<&[f64]>,
    comparator: Option<&[f64]>,
    tol: f64,
) -> Result<f64> {
    if let Some(w) = weights {
        if w.len() != trace.len() {
            return Err(ColError::DimensionMismatch {
                expected: trace.len(),
                found: w.len(),
            });
        }
        if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ColError::InvalidParameter(
                "weights must be positive".into(),
            ));
        }
    }
    let mut acc = CumulativeLoss::new(env.set());
    let mut played = 0.0;
    let mut at_comparator = 0.0;
    for (i, row) in trace.rows.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let loss = env.round(row.n)?;
        played += w * loss.eval(&row.x, &row.x);
        match comparator {
            Some(c) => at_comparator += w * loss.eval(&row.x, c),
            None => acc.add(loss, &row.x, w),
        }
    }
    if comparator.is_some() {
        return Ok(played - at_comparator);
    }
    Ok(played - acc.minimize(tol)?.1)
}

/// Weighted average of the iterates (uniform when `weights` is `None`).
pub fn averaged_iterate(trace: &RunTrace, weights: Option<&[f64]>) -> Result<Point> {
    averaged_prefix(trace, trace.len(), weights)
}

pub(crate) fn averaged_prefix(
    trace: &RunTrace,
    up_to: usize,
    weights: Option<&[f64]>,
) -> Result<Point> {
    if trace.is_empty() || up_to == 0 {
        return Err(ColError::InvalidParameter(
            "cannot average an empty trace".into(),
        ));
    }
    let d = trace.dim();
    let mut sum = vec![0.0; d];
    let mut total = 0.0;
    for (i, row) in trace.rows.iter().take(up_to).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        for (s, x) in sum.iter_mut().zip(row.x.iter()) {
            *s += w * x;
        }
        total += w;
    }
    Point::new(sum.into_iter().map(|s| s / total).collect())
}
