use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solver::{best_response, gap};
use crate::col::Bifunction;
use crate::error::{ColError, Result};
use crate::geometry::{dist, Point};
use crate::tolerance::GRID_POINTS_PER_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumMethod {
    FixedPointIteration,
    GapMinimization,
}

/// A reference equilibrium x* with the evidence behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumCertificate {
    pub x_star: Point,
    pub gap_value: f64,
    pub method: EquilibriumMethod,
    pub iterations: usize,
    /// True only for fixed-point iteration backed by certified alpha > beta.
    pub certified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub grid_points_per_dim: usize,
    /// Number of best grid points polished by local search.
    pub starts: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            tol: 1e-10,
            max_iter: 10_000,
            grid_points_per_dim: GRID_POINTS_PER_DIM,
            starts: 5,
        }
    }
}

pub fn find_equilibrium(
    problem: &dyn Bifunction,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumCertificate> {
    find_equilibrium_with(
        problem,
        &EquilibriumOptions {
            tol,
            max_iter,
            ..Default::default()
        },
    )
}

/// Fixed-point iteration on T when alpha > beta; otherwise grid-seeded
/// minimization of the gap, which carries no certificate.
pub fn find_equilibrium_with(
    problem: &dyn Bifunction,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumCertificate> {
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(ColError::InvalidParameter(format!(
            "tolerance {} must be > 0",
            opts.tol
        )));
    }
    let reg = problem.regularity();
    let inner = (opts.tol * 1e-2).max(1e-15);
    if reg.alpha > reg.beta {
        let mut x = problem.set().center();
        for it in 1..=opts.max_iter {
            let t = best_response(problem, &x, inner)?;
            let r = dist(&x, &t);
            if r <= opts.tol {
                let gap_value = gap(problem, &x, inner)?;
                return Ok(EquilibriumCertificate {
                    x_star: x,
                    gap_value,
                    method: EquilibriumMethod::FixedPointIteration,
                    iterations: it,
                    certified: reg.certified_contractive(),
                });
            }
            x = t;
        }
        let residual = dist(&x, &best_response(problem, &x, inner)?);
        return Err(ColError::NonConvergence {
            iterations: opts.max_iter,
            residual,
        });
    }
    let k = problem.set().intrinsic_dim();
    if k > 3 {
        return Err(ColError::NoCertifiedRoute(format!(
            "beta >= alpha and intrinsic dimension {k} exceeds the grid limit; supply x* explicitly"
        )));
    }
    minimize_gap(problem, opts, inner)
}

fn minimize_gap(
    problem: &dyn Bifunction,
    opts: &EquilibriumOptions,
    inner: f64,
) -> Result<EquilibriumCertificate> {
    let set = problem.set();
    let grid = set.grid(opts.grid_points_per_dim)?;
    let mut scored: Vec<(f64, usize)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, p)| gap(problem, p, inner).map(|g| (g, i)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let spacing = set.diameter() / (opts.grid_points_per_dim - 1) as f64;
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    for &(g0, i) in scored.iter().take(opts.starts.max(1)) {
        let (g, x, iters) = pattern_search(problem, grid[i].to_vec(), g0, spacing, opts, inner)?;
        if best.as_ref().is_none_or(|b| g < b.0) {
            best = Some((g, x, iters));
        }
    }
    let (gap_value, x, iterations) = best.expect("grid is nonempty");
    Ok(EquilibriumCertificate {
        x_star: Point::new(x)?,
        gap_value,
        method: EquilibriumMethod::GapMinimization,
        iterations,
        certified: false,
    })
}

/// Compass search on rho with projection back onto the set.
fn pattern_search(
    problem: &dyn Bifunction,
    mut x: Vec<f64>,
    mut fx: f64,
    mut step: f64,
    opts: &EquilibriumOptions,
    inner: f64,
) -> Result<(f64, Vec<f64>, usize)> {
    let set = problem.set();
    let d = x.len();
    let mut it = 0;
    while step > opts.tol * 1e-3 && it < opts.max_iter && fx > 0.0 {
        it += 1;
        let mut improved = false;
        for i in 0..d {
            for s in [step, -step] {
                let mut y = x.clone();
                y[i] += s;
                let y = set.project_raw(&y);
                let fy = gap(problem, &y, inner)?;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((fx, x, it))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DecisionSet;
    use crate::problems::{EpBifunction, QuadraticTracking};
    use nalgebra::DMatrix;

    #[test]
    fn contraction_route() {
        let p = QuadraticTracking::new(
            2.0,
            0.5,
            Point::new(vec![0.2, -0.1]).unwrap(),
            DecisionSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let cert = find_equilibrium(&p, 1e-10, 1000).unwrap();
        // x* = c / (1 - lambda)
        assert!(cert.x_star.distance(&Point::new(vec![0.4, -0.2]).unwrap()) < 1e-9);
        assert!(cert.certified && cert.method == EquilibriumMethod::FixedPointIteration);
        let bound = (2.0 * 2f64.sqrt() / 1e-10).ln() / 2f64.ln();
        assert!(cert.iterations as f64 <= bound + 1.0);
        assert!(cert.gap_value <= 1e-10);
    }

    #[test]
    fn offline_problem_in_one_step() {
        let p = QuadraticTracking::new(
            1.0,
            0.0,
            Point::new(vec![1.5]).unwrap(),
            DecisionSet::cube(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let cert = find_equilibrium(&p, 1e-12, 10).unwrap();
        assert_eq!(cert.x_star.as_slice(), &[1.0]);
        assert!(cert.iterations <= 2);
    }

    #[test]
    fn symmetric_game_has_uniform_equilibrium() {
        let p = EpBifunction::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]))
            .unwrap();
        let cert = find_equilibrium(&p, 1e-9, 10_000).unwrap();
        assert!(!cert.certified);
        assert!(cert.gap_value <= 1e-9);
        for v in cert.x_star.iter() {
            assert!((v - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn high_dimension_without_contraction_refuses() {
        let p = QuadraticTracking::new(
            1.0,
            1.0,
            Point::zeros(4),
            DecisionSet::cube(4, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            find_equilibrium(&p, 1e-9, 100),
            Err(ColError::NoCertifiedRoute(_))
        ));
    }
}
