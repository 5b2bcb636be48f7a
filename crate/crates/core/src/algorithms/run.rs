use serde::{Deserialize, Serialize};

use crate::col::{Bifunction, FeedbackChannel, FeedbackSpec, Regularity};
use crate::error::{ColError, Result};
use crate::geometry::{dist, dist_sq, dot, lerp, sub, BregmanGeometry, DecisionSet, Point};
use crate::metrics::{CumulativeLoss, RoundDetail, RunContext, RunTrace, TraceRow};
use crate::oracles::{best_response, EquilibriumCertificate};
use crate::problems::PredictableSequence;
use crate::tolerance::{INEQUALITY, ORACLE};

use super::schedule::{Schedule, StepSchedule};

/// The sequence of losses a learner faces.
#[derive(Clone, Copy)]
pub enum Environment<'a> {
    /// Round n's loss is f_{x_n}.
    Stationary(&'a dyn Bifunction),
    /// Round n's loss is f_{x_n} plus a drifting linear term.
    Predictable(&'a PredictableSequence),
}

impl<'a> Environment<'a> {
    pub fn set(&self) -> &'a DecisionSet {
        match *self {
            Environment::Stationary(b) => b.set(),
            Environment::Predictable(p) => p.base().set(),
        }
    }

    pub fn regularity(&self) -> &'a Regularity {
        match *self {
            Environment::Stationary(b) => b.regularity(),
            Environment::Predictable(p) => p.regularity(),
        }
    }

    /// Loss descriptor of round n (1-based).
    pub fn round(&self, n: usize) -> Result<&'a dyn Bifunction> {
        match *self {
            Environment::Stationary(b) => Ok(b),
            Environment::Predictable(p) => Ok(p.round(n)?),
        }
    }

    pub fn drift(&self, n: usize) -> f64 {
        match *self {
            Environment::Stationary(_) => 0.0,
            Environment::Predictable(p) => p.schedule().at(n),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Environment::Stationary(b) => b.label(),
            Environment::Predictable(p) => format!("predictable {}", p.base().label()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmKind {
    Greedy,
    /// `weight` is the mass kept on the current iterate; 0 is greedy.
    Mann {
        weight: StepSchedule,
    },
    MirrorDescent {
        #[serde(default)]
        geometry: BregmanGeometry,
        schedule: StepSchedule,
    },
    Midpoint,
    /// `lambda` defaults to beta / alpha.
    LambdaTrap {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Greedy => "greedy",
            AlgorithmKind::Mann { .. } => "mann",
            AlgorithmKind::MirrorDescent { .. } => "mirror_descent",
            AlgorithmKind::Midpoint => "midpoint",
            AlgorithmKind::LambdaTrap { .. } => "lambda_trap",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// First iterate; the set's center when absent.
    pub start: Option<Point>,
    /// Inner solver accuracy; defaults to the repo-wide oracle tolerance.
    pub tol: Option<f64>,
    /// Reference equilibrium for distance and bound bookkeeping.
    pub equilibrium: Option<EquilibriumCertificate>,
}

enum Rule {
    Greedy,
    Mann(Schedule),
    Mirror(BregmanGeometry, Schedule),
    Midpoint,
    Trap(f64),
}

/// Plays `horizon` rounds. Deterministic given `seed`.
pub fn run(
    kind: &AlgorithmKind,
    env: &Environment<'_>,
    feedback: &FeedbackSpec,
    horizon: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunTrace> {
    if horizon == 0 {
        return Err(ColError::InvalidParameter("horizon must be >= 1".into()));
    }
    if let Environment::Predictable(p) = env {
        if p.horizon() < horizon {
            return Err(ColError::InvalidParameter(format!(
                "predictable sequence has {} rounds, run asks for {horizon}",
                p.horizon()
            )));
        }
    }
    let set = env.set();
    let reg = *env.regularity();
    let tol = opts.tol.unwrap_or(ORACLE);
    let rule = match kind {
        AlgorithmKind::Greedy => Rule::Greedy,
        AlgorithmKind::Midpoint => Rule::Midpoint,
        AlgorithmKind::Mann { weight } => {
            let s = match weight {
                StepSchedule::Constant { eta } if (0.0..=1.0).contains(eta) => {
                    Schedule::Constant(*eta)
                }
                StepSchedule::InvSqrt { scale } if (0.0..=1.0).contains(scale) => {
                    Schedule::InvSqrt(*scale)
                }
                other => {
                    return Err(ColError::InvalidParameter(format!(
                        "Mann weight schedule {other:?} leaves [0, 1]"
                    )))
                }
            };
            Rule::Mann(s)
        }
        AlgorithmKind::MirrorDescent { geometry, schedule } => {
            geometry.check_set(set)?;
            Rule::Mirror(*geometry, schedule.resolve(&reg, geometry.smoothness())?)
        }
        AlgorithmKind::LambdaTrap { lambda } => {
            if set.dim() != 1 {
                return Err(ColError::DimensionMismatch {
                    expected: 1,
                    found: set.dim(),
                });
            }
            let l = lambda.unwrap_or_else(|| reg.difficulty());
            if !(l.is_finite() && l >= 0.0) {
                return Err(ColError::InvalidParameter(format!(
                    "lambda {l} must be finite and >= 0"
                )));
            }
            Rule::Trap(l)
        }
    };
    let uses_feedback = matches!(rule, Rule::Mirror(..));
    if !uses_feedback && !feedback.is_deterministic() {
        return Err(ColError::InvalidParameter(format!(
            "{} uses functional feedback; stochastic or adversarial feedback does not apply",
            kind.name()
        )));
    }
    let mut channel = FeedbackChannel::new(feedback.clone(), set.dim(), seed)?;

    let start = opts.start.clone().unwrap_or_else(|| set.center());
    set.check_member(&start, INEQUALITY)?;
    let mut x = start;
    let x_star = opts.equilibrium.as_ref().map(|c| c.x_star.clone());

    let mut rows = Vec::with_capacity(horizon);
    let mut details = Vec::with_capacity(horizon);
    let mut acc = CumulativeLoss::new(set);
    let (mut played, mut dynamic) = (0.0, 0.0);

    for n in 1..=horizon {
        let loss = env.round(n)?;
        let br = best_response(loss, &x, tol)?;
        let l = loss.eval(&x, &x);
        let gap = l - loss.eval(&x, &br);
        played += l;
        dynamic += gap;
        acc.add(loss, &x, 1.0);
        let static_cum = played - acc.minimize(tol)?.1;

        let mut xi_norm = 0.0;
        let next = match &rule {
            Rule::Greedy => br.clone(),
            Rule::Midpoint => Point::new(lerp(&x, &br, 0.5))?,
            Rule::Mann(s) => {
                let w = s.at(n);
                if w == 0.0 {
                    br.clone()
                } else {
                    Point::new(lerp(&br, &x, w))?
                }
            }
            Rule::Trap(lambda) => Point::new(vec![(lambda * x[0] + br[0]) / (1.0 + lambda)])?,
            Rule::Mirror(geometry, s) => {
                let obs = channel.observe(loss, n, &x)?;
                xi_norm = obs.xi_norm;
                geometry.mirror_step(set, &x, &obs.gradient, s.at(n))?
            }
        };

        let (delta, delta_sq, loss_at_star, linearized) = match &x_star {
            Some(s) => {
                let g = loss.grad(&x, &x);
                (
                    Some(dist(&x, s)),
                    Some(dist_sq(&x, s)),
                    Some(loss.eval(&x, s)),
                    Some(dot(&g, &sub(&x, s))),
                )
            }
            None => (None, None, None, None),
        };
        rows.push(TraceRow {
            n,
            x: x.clone(),
            loss: l,
            gap,
            delta,
            xi_norm,
            static_regret_cum: static_cum,
            dynamic_regret_cum: dynamic,
        });
        details.push(RoundDetail {
            best_response: br,
            loss_at_star,
            linearized,
            delta_sq,
            drift: env.drift(n),
        });
        x = next;
    }

    let (geometry, step) = match &rule {
        Rule::Mirror(g, s) => (Some(*g), s.constant()),
        Rule::Mann(s) => (None, s.constant()),
        Rule::Trap(l) => (None, Some(*l)),
        _ => (None, None),
    };
    Ok(RunTrace {
        problem: env.label(),
        algorithm: kind.name().to_string(),
        seed,
        rows,
        details,
        context: Some(RunContext {
            regularity: reg,
            diameter: set.diameter(),
            geometry,
            step,
            certificate: opts.equilibrium.clone(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::col::NoiseModel;
    use crate::problems::QuadraticTracking;

    fn qt() -> QuadraticTracking {
        QuadraticTracking::new(
            2.0,
            0.5,
            Point::zeros(2),
            DecisionSet::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn start() -> RunOptions {
        RunOptions {
            start: Some(Point::new(vec![1.0, 0.0]).unwrap()),
            ..Default::default()
        }
    }

    #[test]
    fn single_round_regrets_equal_first_gap() {
        let p = qt();
        let t = run(
            &AlgorithmKind::Greedy,
            &Environment::Stationary(&p),
            &FeedbackSpec::Deterministic,
            1,
            0,
            &start(),
        )
        .unwrap();
        assert_eq!(t.len(), 1);
        let r = &t.rows[0];
        assert_eq!(r.gap, 0.25);
        assert_eq!(r.dynamic_regret_cum, 0.25);
        assert!((r.static_regret_cum - 0.25).abs() < 1e-15);
    }

    #[test]
    fn greedy_regret_is_geometric() {
        let p = qt();
        let t = run(
            &AlgorithmKind::Greedy,
            &Environment::Stationary(&p),
            &FeedbackSpec::Deterministic,
            50,
            0,
            &start(),
        )
        .unwrap();
        let limit = 0.25 / (1.0 - 0.25);
        assert!((t.rows[49].dynamic_regret_cum - limit).abs() < 1e-12);
        for r in &t.rows {
            assert!(r.static_regret_cum <= r.dynamic_regret_cum + 1e-12);
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let p = qt();
        let kind = AlgorithmKind::MirrorDescent {
            geometry: BregmanGeometry::Euclidean,
            schedule: StepSchedule::InvSqrt { scale: 1.0 },
        };
        let fb = FeedbackSpec::Stochastic(NoiseModel::Gaussian { sigma: 0.5 });
        let env = Environment::Stationary(&p);
        let a = run(&kind, &env, &fb, 200, 17, &start()).unwrap();
        let b = run(&kind, &env, &fb, 200, 17, &start()).unwrap();
        let c = run(&kind, &env, &fb, 200, 18, &start()).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_ne!(a.rows, c.rows);
        assert!(a.rows.iter().all(|r| p.set().contains(&r.x, 0.0)));
    }

    #[test]
    fn configuration_errors_surface_early() {
        let p = qt();
        let env = Environment::Stationary(&p);
        let fb = FeedbackSpec::Deterministic;
        let entropy = AlgorithmKind::MirrorDescent {
            geometry: BregmanGeometry::Entropy,
            schedule: StepSchedule::Constant { eta: 0.1 },
        };
        assert!(matches!(
            run(&entropy, &env, &fb, 5, 0, &start()),
            Err(ColError::GeometryMismatch(_))
        ));
        assert!(run(
            &AlgorithmKind::LambdaTrap { lambda: None },
            &env,
            &fb,
            5,
            0,
            &start()
        )
        .is_err());
        assert!(run(&AlgorithmKind::Greedy, &env, &fb, 0, 0, &start()).is_err());
        let noisy = FeedbackSpec::Stochastic(NoiseModel::Gaussian { sigma: 1.0 });
        assert!(run(&AlgorithmKind::Greedy, &env, &noisy, 5, 0, &start()).is_err());
        let outside = RunOptions {
            start: Some(Point::new(vec![2.0, 0.0]).unwrap()),
            ..Default::default()
        };
        assert!(run(&AlgorithmKind::Greedy, &env, &fb, 5, 0, &outside).is_err());
    }
}
