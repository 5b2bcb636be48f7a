use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algorithms::{run, AlgorithmKind, Environment, RunOptions, StepSchedule};
use crate::col::{gradient_check, Bifunction, FeedbackSpec};
use crate::error::{ColError, Result};
use crate::geometry::{dist, dot, norm_sq, sub, BregmanGeometry, DecisionSet, Point};
use crate::imitation::{il_convergence_check, ImitationProblem, Policy, TabularMdp};
use crate::metrics::{
    best_response_contraction_margin, best_response_drift, bregman_contraction,
    check_theorem_bounds, monotonicity_margin, Bound, RunTrace,
};
use crate::oracles::{dual_residual, find_equilibrium, gap};
use crate::problems::{
    ConvexFn, DriftSchedule, EpBifunction, PredictableSequence, QuadraticTracking,
};
use crate::tolerance::{EXACT, GRID, INEQUALITY, ORACLE};

pub const SUITES: [&str; 7] = [
    "geometry",
    "regularity",
    "residuals",
    "contraction",
    "theorems",
    "predictable",
    "imitation",
];

/// One invariant with its worst observed margin. The check passes when
/// `margin >= -tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub margin: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.margin >= -self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{tag} {}/{} worst margin {:.3e} (tol {:.0e})",
                self.suite, c.name, c.margin, c.tolerance
            )?;
        }
        let n_ok = self.checks.iter().filter(|c| c.passed()).count();
        write!(
            f,
            "{}: {n_ok}/{} checks passed",
            self.suite,
            self.checks.len()
        )
    }
}

/// Runs a named property suite with fixed seeds.
pub fn check_suite(name: &str) -> Result<SuiteReport> {
    let checks = match name {
        "geometry" => geometry()?,
        "regularity" => regularity()?,
        "residuals" => residuals()?,
        "contraction" => contraction()?,
        "theorems" => theorems()?,
        "predictable" => predictable()?,
        "imitation" => imitation()?,
        _ => {
            return Err(ColError::UnknownSuite {
                name: name.to_string(),
                available: SUITES.join(", "),
            });
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        checks,
    })
}

fn check(name: &str, margin: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        margin,
        tolerance,
    }
}

fn gaussian_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

pub(crate) fn reference_qt(dim: usize) -> Result<QuadraticTracking> {
    QuadraticTracking::new(
        2.0,
        0.5,
        Point::zeros(dim),
        DecisionSet::cube(dim, -1.0, 1.0)?,
    )
}

pub(crate) fn reference_il() -> Result<ImitationProblem> {
    ImitationProblem::new(
        TabularMdp::random(3, 2, 5, 2024)?,
        Policy::random(3, 2, 7),
        None,
        2024,
    )
}

fn geometry() -> Result<Vec<CheckResult>> {
    let sets = [
        DecisionSet::cube(3, -1.0, 1.0)?,
        DecisionSet::ball(Point::zeros(3), 1.0)?,
        DecisionSet::simplex(4)?,
        DecisionSet::product(vec![
            DecisionSet::simplex(2)?,
            DecisionSet::cube(1, 0.0, 2.0)?,
        ])?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut idem, mut nonexp, mut member) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for set in &sets {
        for _ in 0..500 {
            let p = gaussian_point(&mut rng, set.dim(), 2.0);
            let q = gaussian_point(&mut rng, set.dim(), 2.0);
            let (pp, pq) = (set.project(&p)?, set.project(&q)?);
            idem = idem.min(-dist(&set.project(&pp)?, &pp));
            nonexp = nonexp.min(dist(&p, &q) - dist(&pp, &pq));
            member = member.min(-set.violation(&pp));
        }
    }

    let simplex = DecisionSet::simplex(3)?;
    let mut breg = f64::INFINITY;
    for _ in 0..500 {
        let (a, b) = (simplex.sample(&mut rng), simplex.sample(&mut rng));
        breg = breg.min(BregmanGeometry::Euclidean.bregman(&a, &b)?);
        breg = breg.min(BregmanGeometry::Entropy.bregman(&a, &b)?);
    }

    // Euclidean mirror step against brute force over a grid of the square
    let square = DecisionSet::cube(2, -1.0, 1.0)?;
    let grid = square.grid(201)?;
    let mut step_vs_grid = f64::INFINITY;
    for _ in 0..50 {
        let x = square.sample(&mut rng);
        let g = gaussian_point(&mut rng, 2, 3.0);
        let eta = 0.5;
        let obj = |z: &[f64]| eta * dot(&g, z) + 0.5 * norm_sq(&sub(z, &x));
        let step = BregmanGeometry::Euclidean.mirror_step(&square, &x, &g, eta)?;
        let best = grid.iter().map(|z| obj(z)).fold(f64::INFINITY, f64::min);
        step_vs_grid = step_vs_grid.min(best - obj(&step));
    }
    Ok(vec![
        check("projection_idempotent", idem, EXACT),
        check("projection_nonexpansive", nonexp, EXACT),
        check("projection_in_set", member, EXACT),
        check("bregman_nonnegative", breg, EXACT),
        check("mirror_step_beats_grid", step_vs_grid, EXACT),
    ])
}

fn regularity() -> Result<Vec<CheckResult>> {
    let qt = reference_qt(5)?;
    let il = reference_il()?;
    let mut out = Vec::new();
    for (label, p) in [
        ("quadratic_tracking", &qt as &dyn Bifunction),
        ("imitation", &il),
    ] {
        out.push(check(
            &format!("{label}/strong_monotonicity"),
            monotonicity_margin(p, 1000, 3),
            INEQUALITY,
        ));
        out.push(check(
            &format!("{label}/best_response_contraction"),
            best_response_contraction_margin(p, 1000, 4, ORACLE)?,
            INEQUALITY,
        ));
        out.push(check(
            &format!("{label}/gradient_finite_difference"),
            1e-6 - gradient_check(p, 100, 5),
            0.0,
        ));
    }
    let est = crate::col::estimate_regularity(&qt, 2000, 6)?;
    let r = qt.regularity();
    let within = (est.alpha - r.alpha)
        .min(r.beta - est.beta)
        .min(r.gamma - est.gamma)
        .min(r.grad_bound - est.grad_bound);
    out.push(check(
        "quadratic_tracking/estimates_within_certified",
        within,
        INEQUALITY,
    ));
    Ok(out)
}

fn residuals() -> Result<Vec<CheckResult>> {
    let game = EpBifunction::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]))?;
    let convex = EpBifunction::convex_opt(
        ConvexFn::SquaredDistance {
            center: vec![2.0, 0.3],
            scale: 1.0,
        },
        DecisionSet::cube(2, -1.0, 1.0)?,
    )?;
    let vi = non_skew_vi()?;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut out = Vec::new();
    for (label, p) in [
        ("matrix_game", &game),
        ("convex_opt", &convex),
        ("linear_vi", &vi),
    ] {
        let (mut dominated, mut equality, mut root) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let ld = p.dual_lipschitz() * p.set().diameter();
        for _ in 0..100 {
            let x = p.set().sample(&mut rng);
            let g = gap(p, &x, ORACLE)?;
            let (r, _) = dual_residual(p, &x, 101)?;
            dominated = dominated.min(g - r);
            if p.is_skew_symmetric() {
                equality = equality.min(-(g - r).abs());
            }
            if r <= 2.0 * ld {
                root = root.min(2.0 * (2.0 * ld * r.max(0.0)).sqrt() - g);
            }
        }
        out.push(check(
            &format!("{label}/dual_residual_below_gap"),
            dominated,
            GRID,
        ));
        if p.is_skew_symmetric() {
            out.push(check(
                &format!("{label}/skew_equality"),
                equality,
                2.0 * GRID,
            ));
        }
        out.push(check(
            &format!("{label}/gap_below_root_residual"),
            root,
            GRID,
        ));
    }
    Ok(out)
}

pub(crate) fn non_skew_vi() -> Result<EpBifunction> {
    EpBifunction::linear_vi(
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 0.5]),
        vec![0.2, -0.1],
        DecisionSet::cube(2, -1.0, 1.0)?,
    )
}

fn deterministic_run(
    env: Environment<'_>,
    kind: AlgorithmKind,
    horizon: usize,
    start: &[f64],
) -> Result<RunTrace> {
    let reference = match env {
        Environment::Stationary(b) => b,
        Environment::Predictable(p) => p.base(),
    };
    let cert = find_equilibrium(reference, ORACLE, 10_000)?;
    let opts = RunOptions {
        start: Some(Point::new(start.to_vec())?),
        tol: None,
        equilibrium: Some(cert),
    };
    run(&kind, &env, &FeedbackSpec::Deterministic, horizon, 0, &opts)
}

fn md(eta: f64) -> AlgorithmKind {
    AlgorithmKind::MirrorDescent {
        geometry: BregmanGeometry::Euclidean,
        schedule: StepSchedule::Constant { eta },
    }
}

fn contraction() -> Result<Vec<CheckResult>> {
    let qt = reference_qt(2)?;
    let mut out = Vec::new();
    for eta in [0.05, 0.1, 0.2] {
        let trace = deterministic_run(Environment::Stationary(&qt), md(eta), 200, &[1.0, 0.0])?;
        let rep = bregman_contraction(&trace)?;
        out.push(check(
            &format!("mirror_descent_eta_{eta}/bregman_ratio"),
            rep.margin(),
            INEQUALITY,
        ));
    }
    Ok(out)
}

fn theorems() -> Result<Vec<CheckResult>> {
    let qt = reference_qt(2)?;
    let mut out = Vec::new();
    for (label, kind) in [
        ("greedy", AlgorithmKind::Greedy),
        ("mirror_descent", md(0.2)),
    ] {
        let trace = deterministic_run(Environment::Stationary(&qt), kind, 300, &[1.0, 0.0])?;
        for b in [
            Bound::DynamicUpper,
            Bound::DynamicLower,
            Bound::StaticReduction,
        ] {
            let rep = check_theorem_bounds(&trace, b)?;
            out.push(check(
                &format!("{label}/{}", rep.name),
                rep.min_slack,
                INEQUALITY,
            ));
        }
    }
    let game = EpBifunction::matrix_game(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]))?;
    let kind = AlgorithmKind::MirrorDescent {
        geometry: BregmanGeometry::Entropy,
        schedule: StepSchedule::InvSqrt { scale: 1.0 },
    };
    let start = [0.9, 0.1, 0.2, 0.8];
    let trace = run(
        &kind,
        &Environment::Stationary(&game),
        &FeedbackSpec::Deterministic,
        1000,
        0,
        &RunOptions {
            start: Some(Point::new(start.to_vec())?),
            ..RunOptions::default()
        },
    )?;
    let rep = check_theorem_bounds(
        &trace,
        Bound::AveragedDualResidual {
            problem: &game,
            points_per_dim: 101,
            checkpoints: 20,
        },
    )?;
    out.push(check(
        "matrix_game/averaged_dual_residual",
        rep.min_slack,
        1e-6,
    ));
    Ok(out)
}

fn predictable() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (label, drift) in [
        (
            "decaying_drift",
            DriftSchedule::Power {
                scale: 1.0,
                exponent: 0.5,
            },
        ),
        ("zero_drift", DriftSchedule::Zero),
    ] {
        let base =
            QuadraticTracking::new(2.0, 0.2, Point::zeros(2), DecisionSet::cube(2, -1.0, 1.0)?)?;
        let seq = PredictableSequence::new(base, drift, 500, 8)?;
        let kind = AlgorithmKind::MirrorDescent {
            geometry: BregmanGeometry::Euclidean,
            schedule: StepSchedule::Predictable,
        };
        let trace = deterministic_run(Environment::Predictable(&seq), kind, 500, &[1.0, -0.5])?;
        let rep = best_response_drift(&trace)?;
        out.push(check(
            &format!("{label}/best_response_drift"),
            rep.min_slack,
            INEQUALITY,
        ));
        if matches!(drift, DriftSchedule::Zero) {
            let tail = trace.rows[250..]
                .iter()
                .zip(&trace.rows[249..])
                .map(|(b, a)| b.dynamic_regret_cum - a.dynamic_regret_cum)
                .fold(0.0, f64::max);
            out.push(check(
                &format!("{label}/regret_increments_vanish"),
                1e-9 - tail,
                0.0,
            ));
        }
    }
    Ok(out)
}

fn imitation() -> Result<Vec<CheckResult>> {
    let mut worst_sum: f64 = 0.0;
    let mut worst_neg: f64 = 0.0;
    for seed in 0..20 {
        let mdp = TabularMdp::random(5, 3, 8, seed)?;
        let d = mdp.state_distribution(&Policy::random(5, 3, seed + 1000))?;
        worst_sum = worst_sum.max((d.iter().sum::<f64>() - 1.0).abs());
        worst_neg = worst_neg.min(d.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let il = reference_il()?;
    let conv = il_convergence_check(&il, None, 200, None)?;
    let eq_gap = gap(&il, &conv.certificate.x_star, ORACLE)?;
    Ok(vec![
        check("state_distribution_normalized", -worst_sum, EXACT),
        check("state_distribution_nonnegative", worst_neg, 0.0),
        check(
            "gradient_finite_difference",
            1e-6 - gradient_check(&il, 100, 5),
            0.0,
        ),
        check("equilibrium_gap", -eq_gap, INEQUALITY),
        check("gradient_descent_ratio", conv.ratios.margin(), 1e-6),
    ])
}
