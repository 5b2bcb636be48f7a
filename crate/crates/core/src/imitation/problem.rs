use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mdp::TabularMdp;
use super::policy::Policy;
use crate::algorithms::{run, AlgorithmKind, Environment, RunOptions, StepSchedule};
use crate::col::{Bifunction, Certified, DecisionForm, FeedbackSpec, Regularity};
use crate::error::{ColError, Result};
use crate::geometry::{dist, BregmanGeometry, DecisionSet, Point};
use crate::metrics::{distance_ratios, RatioReport};
use crate::oracles::{find_equilibrium, EquilibriumCertificate};
use crate::tolerance::ORACLE;

/// Safety factor applied to the sampled beta.
const BETA_MARGIN: f64 = 1.2;
const BETA_SAMPLES: usize = 4000;

/// Online imitation learning as COL. With d the state distribution of the
/// query policy,
///
///   f_{pi'}(pi) = sum_s (d^{pi'}(s) + mu) / 2 * ||pi(.|s) - pi*(.|s)||^2,
///
/// i.e. a squared imitation loss under the learner's own roll-in plus a
/// mu-weighted proximal term. Decisions are flattened S x A policies.
#[derive(Clone, Debug)]
pub struct ImitationProblem {
    mdp: TabularMdp,
    expert: Policy,
    mu: f64,
    set: DecisionSet,
    regularity: Regularity,
}

impl ImitationProblem {
    /// `mu = None` picks max(2 beta_hat, 0.1) so that alpha > beta.
    pub fn new(mdp: TabularMdp, expert: Policy, mu: Option<f64>, seed: u64) -> Result<Self> {
        if expert.states() != mdp.states() || expert.actions() != mdp.actions() {
            return Err(ColError::DimensionMismatch {
                expected: mdp.states() * mdp.actions(),
                found: expert.states() * expert.actions(),
            });
        }
        let parts = (0..mdp.states())
            .map(|_| DecisionSet::simplex(mdp.actions()))
            .collect::<Result<Vec<_>>>()?;
        let set = DecisionSet::product(parts)?;
        let beta = BETA_MARGIN * estimate_beta(&mdp, &expert, &set, seed);
        let mu = match mu {
            Some(m) if m.is_finite() && m > 0.0 => m,
            Some(m) => return Err(ColError::InvalidParameter(format!("mu {m} must be > 0"))),
            None => (2.0 * beta).max(0.1),
        };
        // ||pi_s - pi*_s|| <= sqrt(2) per state
        let g = (1.0 + mu) * (2.0 * mdp.states() as f64).sqrt();
        let regularity = Regularity {
            alpha: mu,
            beta,
            gamma: 1.0 + mu,
            grad_bound: g,
            known: Certified {
                alpha: true,
                beta: false,
                gamma: true,
                grad_bound: true,
            },
        };
        regularity.validate()?;
        Ok(ImitationProblem {
            mdp,
            expert,
            mu,
            set,
            regularity,
        })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn expert(&self) -> &Policy {
        &self.expert
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn weights(&self, query: &[f64]) -> Vec<f64> {
        self.mdp
            .average_distribution(query)
            .into_iter()
            .map(|d| d + self.mu)
            .collect()
    }

    fn sample_index(p: &[f64], rng: &mut dyn RngCore) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, v) in p.iter().enumerate() {
            acc += v;
            if u < acc {
                return i;
            }
        }
        // rounding left u above the total mass
        p.iter().rposition(|v| *v > 0.0).unwrap_or(0)
    }
}

/// Largest sampled ratio ||grad_pi f_x(z) - grad_pi f_y(z)|| / ||x - y||, over
/// random pairs and short random segments. The mu term cancels in the
/// difference, so this does not depend on mu.
fn estimate_beta(mdp: &TabularMdp, expert: &Policy, set: &DecisionSet, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = mdp.actions();
    let drift = |x: &[f64], y: &[f64], z: &[f64]| -> f64 {
        let (dx, dy) = (mdp.average_distribution(x), mdp.average_distribution(y));
        let mut sq = 0.0;
        for s in 0..mdp.states() {
            let w = dx[s] - dy[s];
            for k in 0..a {
                sq += (w * (z[s * a + k] - expert.as_slice()[s * a + k])).powi(2);
            }
        }
        sq.sqrt()
    };
    let mut best: f64 = 0.0;
    for i in 0..BETA_SAMPLES {
        let x = set.sample(&mut rng);
        let z = set.sample(&mut rng);
        let far = set.sample(&mut rng);
        let y = if i % 2 == 0 {
            far
        } else {
            Point::from_raw(crate::geometry::lerp(&x, &far, 1e-3))
        };
        let d = dist(&x, &y);
        if d > 1e-12 {
            best = best.max(drift(&x, &y, &z) / d);
        }
    }
    best
}

impl Bifunction for ImitationProblem {
    fn set(&self) -> &DecisionSet {
        &self.set
    }

    fn eval(&self, query: &[f64], decision: &[f64]) -> f64 {
        let a = self.mdp.actions();
        let w = self.weights(query);
        let pe = self.expert.as_slice();
        (0..self.mdp.states())
            .map(|s| {
                let sq: f64 = (s * a..(s + 1) * a)
                    .map(|i| (decision[i] - pe[i]).powi(2))
                    .sum();
                0.5 * w[s] * sq
            })
            .sum()
    }

    fn grad(&self, query: &[f64], decision: &[f64]) -> Vec<f64> {
        let a = self.mdp.actions();
        let w = self.weights(query);
        decision
            .iter()
            .zip(self.expert.as_slice())
            .enumerate()
            .map(|(i, (p, e))| w[i / a] * (p - e))
            .collect()
    }

    fn regularity(&self) -> &Regularity {
        &self.regularity
    }

    fn label(&self) -> String {
        format!(
            "imitation(S={}, A={}, H={}, mu={})",
            self.mdp.states(),
            self.mdp.actions(),
            self.mdp.horizon(),
            self.mu
        )
    }

    fn decision_form(&self, query: &[f64]) -> DecisionForm {
        let a = self.mdp.actions();
        let w = self.weights(query);
        let pe = self.expert.as_slice();
        let curvature: Vec<f64> = (0..pe.len()).map(|i| w[i / a]).collect();
        let linear = pe.iter().zip(&curvature).map(|(e, c)| -c * e).collect();
        let constant = pe
            .iter()
            .zip(&curvature)
            .map(|(e, c)| 0.5 * c * e * e)
            .sum();
        DecisionForm::Separable {
            curvature,
            linear,
            constant,
        }
    }

    /// Rolls out the query policy for one episode and asks the expert for an
    /// action at every visited state. The state term is unbiased because the
    /// roll-in has marginals d_t, and the expert term because E[e_a] = pi*(.|s).
    fn sample_gradient(
        &self,
        query: &[f64],
        decision: &[f64],
        rng: &mut dyn RngCore,
    ) -> Option<Vec<f64>> {
        let (a, h) = (self.mdp.actions(), self.mdp.horizon());
        let pe = self.expert.as_slice();
        let mut g: Vec<f64> = decision
            .iter()
            .zip(pe)
            .map(|(p, e)| self.mu * (p - e))
            .collect();
        let mut s = Self::sample_index(self.mdp.initial(), rng);
        for t in 0..h {
            let expert_action = Self::sample_index(&pe[s * a..(s + 1) * a], rng);
            for k in 0..a {
                let label = if k == expert_action { 1.0 } else { 0.0 };
                g[s * a + k] += (decision[s * a + k] - label) / h as f64;
            }
            if t + 1 < h {
                let act = Self::sample_index(&query[s * a..(s + 1) * a], rng);
                s = Self::sample_index(self.mdp.transition(s, act), rng);
            }
        }
        Some(g)
    }
}

/// Outcome of running projected gradient descent on an imitation problem.
#[derive(Clone, Debug)]
pub struct IlConvergence {
    pub certificate: EquilibriumCertificate,
    pub eta: f64,
    pub ratios: RatioReport,
}

/// Runs constant-step projected gradient descent from `start` (uniform policy
/// when absent) and compares each squared-distance ratio to pi_hat with
/// 1 - ((alpha - beta) / (gamma + beta))^2. `eta = None` uses the
/// contraction-optimal step.
pub fn il_convergence_check(
    problem: &ImitationProblem,
    eta: Option<f64>,
    horizon: usize,
    start: Option<Point>,
) -> Result<IlConvergence> {
    let reg = *problem.regularity();
    if reg.alpha <= reg.beta {
        return Err(ColError::InvalidParameter(format!(
            "imitation problem is not contractive: alpha {} <= beta {}",
            reg.alpha, reg.beta
        )));
    }
    let certificate = find_equilibrium(problem, ORACLE, 10_000)?;
    let schedule = match eta {
        Some(eta) => StepSchedule::Constant { eta },
        None => StepSchedule::ContractionOptimal,
    };
    let kind = AlgorithmKind::MirrorDescent {
        geometry: BregmanGeometry::Euclidean,
        schedule,
    };
    let start = start.unwrap_or_else(|| {
        let p = Policy::uniform(problem.mdp.states(), problem.mdp.actions());
        Point::from_raw(p.as_slice().to_vec())
    });
    let opts = RunOptions {
        start: Some(start),
        tol: None,
        equilibrium: Some(certificate.clone()),
    };
    let trace = run(
        &kind,
        &Environment::Stationary(problem),
        &FeedbackSpec::Deterministic,
        horizon,
        0,
        &opts,
    )?;
    let eta = trace
        .context
        .as_ref()
        .and_then(|c| c.step)
        .unwrap_or(f64::NAN);
    let rate = (reg.alpha - reg.beta) / (reg.gamma + reg.beta);
    let ratios = distance_ratios(&trace, &certificate.x_star, 1.0 - rate * rate);
    Ok(IlConvergence {
        certificate,
        eta,
        ratios,
    })
}
