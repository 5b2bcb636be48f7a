use crate::col::{check_query, Bifunction};
use crate::error::{ColError, Result};
use crate::geometry::{dist, dot, sub, Point};

const MAX_PGD_ITERATIONS: usize = 200_000;

/// T(x) = argmin of f_x over the set, to accuracy `tol` in function value.
///
/// Closed forms are used when available. Otherwise projected gradient descent
/// with backtracking runs until the gradient mapping is at most
/// sqrt(2 alpha tol), which bounds the suboptimality by `tol` for an
/// alpha-strongly convex f_x. With alpha = 0 the mapping norm itself is held
/// to `tol`.
pub fn best_response(problem: &dyn Bifunction, x: &[f64], tol: f64) -> Result<Point> {
    check_query(problem, x)?;
    if let Some(p) = problem.closed_form_best_response(x) {
        return Ok(p);
    }
    projected_gradient(problem, x, tol)
}

pub(crate) fn projected_gradient(problem: &dyn Bifunction, x: &[f64], tol: f64) -> Result<Point> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ColError::InvalidParameter(format!(
            "solver tolerance {tol} must be > 0"
        )));
    }
    let set = problem.set();
    let reg = problem.regularity();
    let threshold = if reg.alpha > 0.0 {
        (2.0 * reg.alpha * tol).sqrt()
    } else {
        tol
    };
    let mut lip = if reg.gamma > 0.0 { reg.gamma } else { 1.0 };
    let mut z = set.project_raw(x);
    let mut fz = problem.eval(x, &z);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_PGD_ITERATIONS {
        let g = problem.grad(x, &z);
        loop {
            let trial: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lip).collect();
            let next = set.project_raw(&trial);
            let step = sub(&next, &z);
            let f_next = problem.eval(x, &next);
            let model = fz + dot(&g, &step) + 0.5 * lip * dot(&step, &step);
            if f_next <= model + 1e-14 * (1.0 + fz.abs()) || lip > 1e15 {
                residual = lip * dist(&next, &z);
                z = next;
                fz = f_next;
                break;
            }
            lip *= 2.0;
        }
        if residual <= threshold {
            return Point::new(z);
        }
    }
    Err(ColError::NonConvergence {
        iterations: MAX_PGD_ITERATIONS,
        residual,
    })
}

/// rho(x) = f_x(x) - min f_x, the instantaneous dynamic regret. Reported
/// unclamped so solver error stays visible.
pub fn gap(problem: &dyn Bifunction, x: &[f64], tol: f64) -> Result<f64> {
    let br = best_response(problem, x, tol)?;
    Ok(problem.eval(x, x) - problem.eval(x, &br))
}
