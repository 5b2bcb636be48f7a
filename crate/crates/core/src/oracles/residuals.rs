use nalgebra::DVector;
use rayon::prelude::*;

use crate::col::Bifunction;
use crate::error::{ColError, Result};
use crate::geometry::{check_dim, dot, DecisionSet, Point};
use crate::problems::{ConvexFn, EpBifunction, EpSource};

/// How the dual residual was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualMethod {
    ClosedForm,
    /// Dense grid maximization refined by projected gradient ascent.
    Grid {
        points_per_dim: usize,
    },
}

/// r_dep(x_hat) = max over x of Phi(x, x_hat).
pub fn dual_residual(
    problem: &EpBifunction,
    x_hat: &[f64],
    points_per_dim: usize,
) -> Result<(f64, ResidualMethod)> {
    let set = problem.set();
    check_dim(set.dim(), x_hat.len())?;
    match problem.source() {
        EpSource::ConvexOpt(h) => {
            let min_h = match h {
                ConvexFn::SquaredDistance { center, .. } => h.value(&set.project(center)?),
                ConvexFn::Linear { weights } => h.value(&set.minimize_linear(weights)?),
            };
            Ok((h.value(x_hat) - min_h, ResidualMethod::ClosedForm))
        }
        EpSource::MatrixGame(a) => {
            let (u, v) = x_hat.split_at(a.nrows());
            let atu = a.tr_mul(&DVector::from_column_slice(u));
            let av = a * DVector::from_column_slice(v);
            Ok((atu.max() - av.min(), ResidualMethod::ClosedForm))
        }
        EpSource::LinearVi { m, q } => {
            let grid = checked_grid(set, points_per_dim)?;
            let value = |x: &[f64]| problem.phi(x, x_hat);
            let (start, best) = grid_argmax(&grid, value);
            // Phi(., x_hat) is concave for PSD M, so ascent from the best grid
            // point reaches the global maximum.
            let step = 1.0 / (2.0 * m.clone().singular_values().max()).max(1e-12);
            let mut x = start.to_vec();
            let mut fx = best;
            for _ in 0..5_000 {
                let xv = DVector::from_column_slice(&x);
                let diff = DVector::from_column_slice(x_hat) - &xv;
                let mut g = m.tr_mul(&diff) - m * &xv;
                for (gi, qi) in g.iter_mut().zip(q) {
                    *gi -= qi;
                }
                let next = set.project_raw(
                    &x.iter()
                        .zip(g.iter())
                        .map(|(a, b)| a + step * b)
                        .collect::<Vec<_>>(),
                );
                let fn_ = value(&next);
                let moved = next
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if fn_ >= fx {
                    fx = fn_;
                    x = next;
                }
                if moved < 1e-14 {
                    break;
                }
            }
            Ok((fx.max(best), ResidualMethod::Grid { points_per_dim }))
        }
    }
}

/// max over grid points x of <F(x), x_hat - x> with F(x) = grad f_x(x).
/// Nonpositive when x_hat solves the dual VI at grid resolution.
pub fn dvi_residual(problem: &dyn Bifunction, x_hat: &[f64], points_per_dim: usize) -> Result<f64> {
    let set = problem.set();
    check_dim(set.dim(), x_hat.len())?;
    let grid = checked_grid(set, points_per_dim)?;
    let (_, best) = grid_argmax(&grid, |x| {
        let f = problem.grad(x, x);
        let diff: Vec<f64> = x_hat.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        dot(&f, &diff)
    });
    Ok(best)
}

fn checked_grid(set: &DecisionSet, points_per_dim: usize) -> Result<Vec<Point>> {
    let k = set.intrinsic_dim();
    if k > 3 {
        return Err(ColError::GridUnsupported { dim: k });
    }
    set.grid(points_per_dim)
}

/// Parallel argmax with ties broken by lowest index, so the result does not
/// depend on scheduling.
fn grid_argmax<'a, F>(grid: &'a [Point], f: F) -> (&'a Point, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (i, v) = grid.par_iter().enumerate().map(|(i, p)| (i, f(p))).reduce(
        || (usize::MAX, f64::NEG_INFINITY),
        |a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        },
    );
    (&grid[i], v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::gap;
    use crate::problems::QuadraticTracking;
    use nalgebra::DMatrix;

    #[test]
    fn convex_opt_closed_form() {
        let h = ConvexFn::SquaredDistance {
            center: vec![0.0],
            scale: 1.0,
        };
        let p = EpBifunction::convex_opt(h, DecisionSet::cube(1, -1.0, 1.0).unwrap()).unwrap();
        let (r, m) = dual_residual(&p, &[0.5], 101).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
        assert_eq!(m, ResidualMethod::ClosedForm);
    }

    #[test]
    fn game_residual_at_nash_is_zero_and_matches_grid() {
        let p = EpBifunction::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]))
            .unwrap();
        assert_eq!(
            dual_residual(&p, &[0.5, 0.5, 0.5, 0.5], 101).unwrap().0,
            0.0
        );
        let x_hat = [0.8, 0.2, 0.3, 0.7];
        let (closed, _) = dual_residual(&p, &x_hat, 101).unwrap();
        let grid = p.set().grid(101).unwrap();
        let brute = grid
            .iter()
            .map(|x| p.phi(x, &x_hat))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((closed - brute).abs() < 1e-12);
    }

    #[test]
    fn linear_vi_residual_ordering() {
        let p = EpBifunction::linear_vi(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 0.3]),
            vec![0.2, -0.1],
            DecisionSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        for x_hat in [[0.3, 0.3], [-1.0, 0.5], [0.9, -0.9]] {
            let (r_dep, _) = dual_residual(&p, &x_hat, 101).unwrap();
            let r_dvi = dvi_residual(&p, &x_hat, 101).unwrap();
            let r_ep = gap(&p, &x_hat, 1e-12).unwrap();
            assert!(r_dvi <= r_dep + 1e-12, "{r_dvi} > {r_dep}");
            assert!(r_dep <= r_ep + 1e-12, "{r_dep} > {r_ep}");
        }
    }

    #[test]
    fn dvi_sign_on_tracking_problem() {
        let p = QuadraticTracking::new(
            2.0,
            0.5,
            Point::zeros(2),
            DecisionSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(dvi_residual(&p, &[0.0, 0.0], 101).unwrap() <= 0.0);
        assert!(dvi_residual(&p, &[0.9, -0.4], 101).unwrap() > 0.0);
    }

    #[test]
    fn grid_refused_above_three_dimensions() {
        let p = QuadraticTracking::new(
            2.0,
            0.5,
            Point::zeros(4),
            DecisionSet::cube(4, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            dvi_residual(&p, &[0.0; 4], 11),
            Err(ColError::GridUnsupported { dim: 4 })
        ));
    }
}
