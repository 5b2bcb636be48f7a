use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::regret::averaged_prefix;
use super::trace::RunTrace;
use crate::col::{operator, Bifunction};
use crate::error::{ColError, Result};
use crate::geometry::{dist, dist_sq, dot, norm, sub, Point};
use crate::oracles::{best_response, dual_residual};
use crate::problems::EpBifunction;
use crate::tolerance::{INEQUALITY, RATIO_FLOOR};

/// Which inequality to evaluate along a trace.
#[derive(Clone, Copy)]
pub enum Bound<'a> {
    /// Regret^d <= min{G sum Delta, Regret^s(x*)} + sum min{beta D Delta, beta^2 Delta^2 / (2 alpha)}
    DynamicUpper,
    /// Regret^d >= (alpha / 2) sum ||x_n^* - x*||^2
    DynamicLower,
    /// Regret^d <= Regret^s(x*) + beta^2 R_lin(x*) / (2 alpha (alpha - beta)), alpha > beta,
    /// where R_lin is the static regret of the linearized losses.
    StaticReduction,
    /// r_dep(average of x_1..x_N) <= Regret^s_N / N at log-spaced checkpoints.
    AveragedDualResidual {
        problem: &'a EpBifunction,
        points_per_dim: usize,
        checkpoints: usize,
    },
}

impl Bound<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Bound::DynamicUpper => "dynamic_upper",
            Bound::DynamicLower => "dynamic_lower",
            Bound::StaticReduction => "static_reduction",
            Bound::AveragedDualResidual { .. } => "averaged_dual_residual",
        }
    }
}

/// Slack (right side minus left side, or the reverse for lower bounds) of an
/// inequality at each evaluated horizon N.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    pub slack: Vec<(usize, f64)>,
    pub min_slack: f64,
}

impl BoundReport {
    fn from_slack(name: &'static str, slack: Vec<(usize, f64)>) -> Self {
        let min_slack = slack.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        BoundReport {
            name,
            slack,
            min_slack,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack >= -tol
    }
}

pub fn check_theorem_bounds(trace: &RunTrace, which: Bound<'_>) -> Result<BoundReport> {
    if trace.is_empty() {
        return Err(ColError::InvalidParameter("empty trace".into()));
    }
    if let Bound::AveragedDualResidual {
        problem,
        points_per_dim,
        checkpoints,
    } = which
    {
        return averaged_dual_residual(trace, problem, points_per_dim, checkpoints);
    }
    let ctx = trace
        .context
        .as_ref()
        .ok_or(ColError::MissingCertificate("run context"))?;
    if ctx.certificate.is_none() {
        return Err(ColError::MissingCertificate("reference equilibrium"));
    }
    if trace.details.len() != trace.len() {
        return Err(ColError::MissingCertificate("per-round details"));
    }
    let reg = ctx.regularity;
    let x_star = &ctx.certificate.as_ref().unwrap().x_star;
    let (alpha, beta, g, d) = (reg.alpha, reg.beta, reg.grad_bound, ctx.diameter);
    if trace.details.iter().any(|d| d.drift != 0.0) {
        return Err(ColError::InvalidParameter(
            "regret bounds assume a stationary bifunction, this trace has drift".into(),
        ));
    }
    if matches!(which, Bound::DynamicLower) {
        // the lower bound needs x* to solve the dual problem, so in particular
        // f_{x_n}(x_n) >= f_{x_n}(x*) on every round
        for (row, det) in trace.rows.iter().zip(&trace.details) {
            let at_star = det
                .loss_at_star
                .ok_or(ColError::MissingCertificate("loss at equilibrium"))?;
            if row.loss - at_star < -INEQUALITY {
                return Err(ColError::InvalidParameter(format!(
                    "reference equilibrium is not a dual solution (round {} has f(x_n) < f(x*))",
                    row.n
                )));
            }
        }
    }
    if matches!(which, Bound::StaticReduction) && alpha <= beta {
        return Err(ColError::InvalidParameter(
            "static reduction needs alpha > beta".into(),
        ));
    }

    let mut slack = Vec::with_capacity(trace.len());
    let (mut sum_delta, mut static_star, mut second, mut lower, mut linear) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for (row, det) in trace.rows.iter().zip(&trace.details) {
        let delta = row
            .delta
            .ok_or(ColError::MissingCertificate("distance to equilibrium"))?;
        let delta_sq = det.delta_sq.unwrap_or(delta * delta);
        let at_star = det
            .loss_at_star
            .ok_or(ColError::MissingCertificate("loss at equilibrium"))?;
        sum_delta += delta;
        static_star += row.loss - at_star;
        second += if beta == 0.0 {
            0.0
        } else if alpha == 0.0 {
            beta * d * delta
        } else {
            (beta * d * delta).min(beta * beta / (2.0 * alpha) * delta_sq)
        };
        lower += 0.5 * alpha * dist_sq(&det.best_response, x_star);
        linear += det
            .linearized
            .ok_or(ColError::MissingCertificate("linearized loss"))?;
        let dynamic = row.dynamic_regret_cum;
        let s = match which {
            Bound::DynamicUpper => (g * sum_delta).min(static_star) + second - dynamic,
            Bound::DynamicLower => dynamic - lower,
            Bound::StaticReduction => {
                static_star + beta * beta * linear / (2.0 * alpha * (alpha - beta)) - dynamic
            }
            Bound::AveragedDualResidual { .. } => unreachable!(),
        };
        slack.push((row.n, s));
    }
    Ok(BoundReport::from_slack(which.name(), slack))
}

fn averaged_dual_residual(
    trace: &RunTrace,
    problem: &EpBifunction,
    points_per_dim: usize,
    checkpoints: usize,
) -> Result<BoundReport> {
    let mut slack = Vec::new();
    for k in log_checkpoints(1, trace.len(), checkpoints) {
        let x_hat = averaged_prefix(trace, k, None)?;
        let (r_dep, _) = dual_residual(problem, &x_hat, points_per_dim)?;
        let row = &trace.rows[k - 1];
        slack.push((row.n, row.static_regret_cum / k as f64 - r_dep));
    }
    Ok(BoundReport::from_slack("averaged_dual_residual", slack))
}

/// Up to `count` distinct integers spread log-uniformly over [lo, hi],
/// always including both ends.
pub fn log_checkpoints(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if hi <= lo || count < 2 {
        return vec![hi.max(lo)];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .map(|v| v.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

/// Per-step ratios with their worst case against a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioReport {
    pub bound: f64,
    pub ratios: Vec<(usize, f64)>,
    pub max_ratio: f64,
}

impl RatioReport {
    fn new(bound: f64, ratios: Vec<(usize, f64)>) -> Self {
        let max_ratio = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        RatioReport {
            bound,
            ratios,
            max_ratio,
        }
    }

    pub fn margin(&self) -> f64 {
        self.bound - self.max_ratio
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.ratios.is_empty() || self.max_ratio <= self.bound + tol
    }
}

/// B(x* || x_{n+1}) / B(x* || x_n) along a constant-step mirror-descent
/// trace, against 1 - 2 eta (alpha - beta) / L + eta^2 (gamma + beta)^2.
pub fn bregman_contraction(trace: &RunTrace) -> Result<RatioReport> {
    let ctx = trace
        .context
        .as_ref()
        .ok_or(ColError::MissingCertificate("run context"))?;
    let geometry = ctx
        .geometry
        .ok_or_else(|| ColError::InvalidParameter("trace is not a mirror-descent run".into()))?;
    let eta = ctx
        .step
        .ok_or_else(|| ColError::InvalidParameter("contraction needs a constant step".into()))?;
    let l = geometry.smoothness().ok_or_else(|| {
        ColError::InvalidParameter("contraction needs a smooth mirror map".into())
    })?;
    let x_star = &ctx
        .certificate
        .as_ref()
        .ok_or(ColError::MissingCertificate("reference equilibrium"))?
        .x_star;
    let bound = ctx.regularity.mirror_descent_rate(eta, l);
    let mut ratios = Vec::new();
    for w in trace.rows.windows(2) {
        let den = geometry.bregman(x_star, &w[0].x)?;
        if den > RATIO_FLOOR {
            ratios.push((w[0].n, geometry.bregman(x_star, &w[1].x)? / den));
        }
    }
    Ok(RatioReport::new(bound, ratios))
}

/// ||x_{n+1} - target||^2 / ||x_n - target||^2, skipping denominators below
/// the ratio floor.
pub fn distance_ratios(trace: &RunTrace, target: &[f64], bound: f64) -> RatioReport {
    let mut ratios = Vec::new();
    for w in trace.rows.windows(2) {
        let den = dist_sq(&w[0].x, target);
        if den > RATIO_FLOOR {
            ratios.push((w[0].n, dist_sq(&w[1].x, target) / den));
        }
    }
    RatioReport::new(bound, ratios)
}

/// Slack of ||x_n^* - x_{n-1}^*|| <= (beta/alpha) ||x_n - x_{n-1}|| + a_n / alpha
/// for n >= 2.
pub fn best_response_drift(trace: &RunTrace) -> Result<BoundReport> {
    let ctx = trace
        .context
        .as_ref()
        .ok_or(ColError::MissingCertificate("run context"))?;
    if trace.details.len() != trace.len() {
        return Err(ColError::MissingCertificate("per-round details"));
    }
    let (alpha, beta) = (ctx.regularity.alpha, ctx.regularity.beta);
    if alpha <= 0.0 {
        return Err(ColError::InvalidParameter(
            "best-response drift needs alpha > 0".into(),
        ));
    }
    let mut slack = Vec::new();
    for i in 1..trace.len() {
        let lhs = dist(
            &trace.details[i].best_response,
            &trace.details[i - 1].best_response,
        );
        let rhs = beta / alpha * dist(&trace.rows[i].x, &trace.rows[i - 1].x)
            + trace.details[i].drift / alpha;
        slack.push((trace.rows[i].n, rhs - lhs));
    }
    Ok(BoundReport::from_slack("best_response_drift", slack))
}

/// (sum ||x_n^* - x_{n+1}^*||, sum ||x_n - x_{n+1}||).
pub fn path_variation(trace: &RunTrace) -> Result<(f64, f64)> {
    if trace.details.len() != trace.len() {
        return Err(ColError::MissingCertificate("per-round details"));
    }
    let br: f64 = trace
        .details
        .windows(2)
        .map(|w| dist(&w[0].best_response, &w[1].best_response))
        .sum();
    let xs: f64 = trace.rows.windows(2).map(|w| dist(&w[0].x, &w[1].x)).sum();
    Ok((br, xs))
}

/// Least-squares slope of log(value) against log(n).
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, v)| *n > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(n, v)| (n.ln(), v.ln()))
        .collect();
    if pts.len() < 2 || pts.len() != points.len() {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of a cumulative series over the last decade of its rounds
/// ([N/10, N]), sampled at log-spaced checkpoints.
pub fn last_decade_slope(series: &[(usize, f64)]) -> Option<f64> {
    let n_max = series.last()?.0;
    window_slope(series, n_max / 10, n_max)
}

/// Slope over rounds [lo, hi] at up to 25 log-spaced checkpoints, each
/// mapped to the first recorded round at or after it.
pub fn window_slope(series: &[(usize, f64)], lo: usize, hi: usize) -> Option<f64> {
    if lo == 0 || hi <= lo {
        return None;
    }
    let mut pts = Vec::new();
    let mut last = 0;
    for target in log_checkpoints(lo, hi, 25) {
        let idx = series.partition_point(|p| p.0 < target);
        if let Some(&(n, v)) = series.get(idx) {
            if n <= hi && n != last {
                pts.push((n as f64, v));
                last = n;
            }
        }
    }
    loglog_slope(&pts)
}

/// Worst margin of <F(x*), x - x*> >= ||x - x*||^2 ||F(x*)|| / (2 r) over
/// random points of a ball of radius r.
pub fn strongly_convex_set_margin(
    problem: &dyn Bifunction,
    x_star: &Point,
    radius: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = operator(problem, x_star);
    let fnorm = norm(&f);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x = problem.set().sample(&mut rng);
        let diff = sub(&x, x_star);
        let margin = dot(&f, &diff) - dot(&diff, &diff) * fnorm / (2.0 * radius);
        worst = worst.min(margin);
    }
    worst
}

/// min over sampled pairs of <F(x) - F(y), x - y> - (alpha - beta) ||x - y||^2
/// with F(x) = grad f_x(x). Nonnegative under strong monotonicity.
pub fn monotonicity_margin(problem: &dyn Bifunction, pairs: usize, seed: u64) -> f64 {
    let reg = problem.regularity();
    let m = reg.alpha - reg.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        let x = problem.set().sample(&mut rng);
        let y = problem.set().sample(&mut rng);
        let lhs = dot(
            &sub(&operator(problem, &x), &operator(problem, &y)),
            &sub(&x, &y),
        );
        worst = worst.min(lhs - m * dist_sq(&x, &y));
    }
    worst
}

/// min over sampled pairs of (beta / alpha) ||x - y|| - ||T(x) - T(y)|| for the
/// best-response map T.
pub fn best_response_contraction_margin(
    problem: &dyn Bifunction,
    pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    let reg = problem.regularity();
    if reg.alpha <= 0.0 {
        return Err(ColError::InvalidParameter(
            "best-response contraction needs alpha > 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        let x = problem.set().sample(&mut rng);
        let y = problem.set().sample(&mut rng);
        let tx = best_response(problem, &x, tol)?;
        let ty = best_response(problem, &y, tol)?;
        worst = worst.min(reg.beta / reg.alpha * dist(&x, &y) - dist(&tx, &ty));
    }
    Ok(worst)
}
