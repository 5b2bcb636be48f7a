use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::regularity::{Certified, Regularity};
use crate::error::{ColError, Result};
use crate::geometry::{check_dim, dist, dot, norm, sub, DecisionSet, Point};
use crate::tolerance::INEQUALITY;

/// Shape of f_x(.) as a function of the decision argument.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionForm {
    /// 0.5 * sum c_i z_i^2 + <b, z> + k
    Separable {
        curvature: Vec<f64>,
        linear: Vec<f64>,
        constant: f64,
    },
    General,
}

/// A COL loss descriptor f_x(x'): `query` is x (it selects the round's loss)
/// and `decision` is x' (the point being scored).
///
/// Implementations must be pure: equal arguments give equal outputs.
pub trait Bifunction: Send + Sync {
    fn set(&self) -> &DecisionSet;

    fn eval(&self, query: &[f64], decision: &[f64]) -> f64;

    /// Gradient of `eval` in the decision argument.
    fn grad(&self, query: &[f64], decision: &[f64]) -> Vec<f64>;

    fn regularity(&self) -> &Regularity;

    fn label(&self) -> String;

    fn decision_form(&self, _query: &[f64]) -> DecisionForm {
        DecisionForm::General
    }

    /// argmin of f_query over the set, when it has a closed form.
    fn closed_form_best_response(&self, query: &[f64]) -> Option<Point> {
        match self.decision_form(query) {
            DecisionForm::Separable {
                curvature, linear, ..
            } => self.set().minimize_separable_quadratic(&curvature, &linear),
            DecisionForm::General => None,
        }
    }

    /// An unbiased stochastic estimate of `grad`, for problems whose
    /// stochastic feedback comes from sampling rather than additive noise.
    fn sample_gradient(
        &self,
        _query: &[f64],
        _decision: &[f64],
        _rng: &mut dyn RngCore,
    ) -> Option<Vec<f64>> {
        None
    }

    fn dim(&self) -> usize {
        self.set().dim()
    }
}

/// f_query(decision), with both points checked against the set.
pub fn loss_at(problem: &dyn Bifunction, query: &[f64], decision: &[f64]) -> Result<f64> {
    problem.set().check_member(query, INEQUALITY)?;
    problem.set().check_member(decision, INEQUALITY)?;
    Ok(problem.eval(query, decision))
}

/// F(x) = grad f_x(x), the operator of the associated VI.
pub fn operator(problem: &dyn Bifunction, x: &[f64]) -> Vec<f64> {
    problem.grad(x, x)
}

/// Empirical regularity constants from pairwise sampling. The returned
/// constants are flagged as estimated.
pub fn estimate_regularity(
    problem: &dyn Bifunction,
    n_samples: usize,
    seed: u64,
) -> Result<Regularity> {
    if n_samples < 2 {
        return Err(ColError::InvalidParameter(
            "estimate_regularity needs at least 2 samples".into(),
        ));
    }
    let set = problem.set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha = f64::INFINITY;
    let (mut beta, mut gamma, mut g_max) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n_samples {
        let x = set.sample(&mut rng);
        let y = set.sample(&mut rng);
        let z = set.sample(&mut rng);
        let w = set.sample(&mut rng);

        let gxz = problem.grad(&x, &z);
        let gxw = problem.grad(&x, &w);
        let gyz = problem.grad(&y, &z);

        let dzw = dist(&z, &w);
        if dzw > 1e-9 {
            let diff = sub(&gxw, &gxz);
            alpha = alpha.min(dot(&diff, &sub(&w, &z)) / (dzw * dzw));
            gamma = gamma.max(norm(&diff) / dzw);
        }
        let dxy = dist(&x, &y);
        if dxy > 1e-9 {
            beta = beta.max(dist(&gxz, &gyz) / dxy);
        }
        g_max = g_max.max(norm(&gxz)).max(norm(&gxw));
    }
    if !alpha.is_finite() {
        alpha = 0.0;
    }
    Ok(Regularity {
        alpha: alpha.max(0.0),
        beta,
        gamma,
        grad_bound: g_max,
        known: Certified::NONE,
    })
}

/// Largest relative disagreement between `grad` and central finite
/// differences of `eval` over random points.
pub fn gradient_check(problem: &dyn Bifunction, samples: usize, seed: u64) -> f64 {
    let set = problem.set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = set.sample(&mut rng);
        let z = set.sample(&mut rng);
        let g = problem.grad(&x, &z);
        let mut fd = vec![0.0; z.len()];
        let mut zp = z.to_vec();
        for i in 0..z.len() {
            let orig = zp[i];
            zp[i] = orig + h;
            let up = problem.eval(&x, &zp);
            zp[i] = orig - h;
            let down = problem.eval(&x, &zp);
            zp[i] = orig;
            fd[i] = (up - down) / (2.0 * h);
        }
        worst = worst.max(dist(&g, &fd) / (1.0 + norm(&g)));
    }
    worst
}

pub(crate) fn check_query(problem: &dyn Bifunction, x: &[f64]) -> Result<()> {
    check_dim(problem.dim(), x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ColError::NonFinite);
    }
    Ok(())
}
