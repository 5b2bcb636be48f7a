use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run, AlgorithmKind, Environment, RunOptions};
use crate::col::{Adversary, Bifunction, FeedbackSpec, NoiseModel};
use crate::error::{ColError, Result};
use crate::geometry::{DecisionSet, Point};
use crate::imitation::{ImitationProblem, Policy, TabularMdp};
use crate::oracles::EquilibriumOptions;
use crate::problems::{
    ConvexFn, DriftSchedule, EpBifunction, PredictableSequence, QuadraticTracking,
};
use crate::tolerance::{GRID_POINTS_PER_DIM, ORACLE};

pub const CONFIG_VERSION: u32 = 1;

/// One experiment: a problem, the algorithms to compare on it, and the seeds
/// each algorithm is run with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    /// First iterate shared by every cell; the set's center when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    pub problem: ProblemSpec,
    pub algorithms: Vec<AlgorithmKind>,
    #[serde(default)]
    pub feedback: FeedbackConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Exactly one of `lambda` (K = lambda I) and `coupling` (a general K).
    QuadraticTracking {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coupling: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
        set: DecisionSet,
    },
    Rotation {
        alpha: f64,
        angle_degrees: f64,
        set: DecisionSet,
    },
    ConvexOpt {
        objective: ConvexFn,
        set: DecisionSet,
    },
    MatrixGame {
        payoff: Vec<Vec<f64>>,
    },
    LinearVi {
        m: Vec<Vec<f64>>,
        q: Vec<f64>,
        set: DecisionSet,
    },
    Predictable {
        alpha: f64,
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
        set: DecisionSet,
        drift: DriftSchedule,
        #[serde(default)]
        drift_seed: u64,
    },
    Imitation {
        states: usize,
        actions: usize,
        episode_length: usize,
        #[serde(default)]
        mdp_seed: u64,
        #[serde(default)]
        expert_seed: u64,
        /// MDP text file; overrides the seeded instance. Relative paths
        /// resolve against the working directory.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mdp_file: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<Adversary>,
}

impl FeedbackConfig {
    pub fn spec(&self) -> FeedbackSpec {
        match (self.noise.clone(), self.adversary.clone()) {
            (None, None) => FeedbackSpec::Deterministic,
            (Some(n), None) => FeedbackSpec::Stochastic(n),
            (None, Some(a)) => FeedbackSpec::Adversarial(a),
            (Some(n), Some(a)) => FeedbackSpec::Combined(n, a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_grid")]
    pub grid_points_per_dim: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Compute a reference equilibrium for distance and bound bookkeeping.
    #[serde(default = "default_true")]
    pub equilibrium: bool,
}

fn default_tol() -> f64 {
    ORACLE
}

fn default_grid() -> usize {
    GRID_POINTS_PER_DIM
}

fn default_max_iter() -> usize {
    10_000
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            tol: ORACLE,
            grid_points_per_dim: GRID_POINTS_PER_DIM,
            max_iter: 10_000,
            equilibrium: true,
        }
    }
}

impl OracleConfig {
    pub fn equilibrium_options(&self) -> EquilibriumOptions {
        EquilibriumOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            grid_points_per_dim: self.grid_points_per_dim,
            ..EquilibriumOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Keep every k-th round in trace CSVs (the last round is always kept).
    #[serde(default = "default_stride")]
    pub row_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            row_stride: 1,
        }
    }
}

/// A problem ready to be played.
pub enum BuiltProblem {
    Stationary(Box<dyn Bifunction>),
    Equilibrium(EpBifunction),
    Predictable(PredictableSequence),
}

impl BuiltProblem {
    pub fn environment(&self) -> Environment<'_> {
        match self {
            BuiltProblem::Stationary(b) => Environment::Stationary(b.as_ref()),
            BuiltProblem::Equilibrium(e) => Environment::Stationary(e),
            BuiltProblem::Predictable(p) => Environment::Predictable(p),
        }
    }

    /// The bifunction whose equilibrium serves as x*; the drift-free base
    /// loss for predictable sequences.
    pub fn reference(&self) -> &dyn Bifunction {
        match self {
            BuiltProblem::Stationary(b) => b.as_ref(),
            BuiltProblem::Equilibrium(e) => e,
            BuiltProblem::Predictable(p) => p.base(),
        }
    }

    pub fn as_ep(&self) -> Option<&EpBifunction> {
        match self {
            BuiltProblem::Equilibrium(e) => Some(e),
            _ => None,
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(ColError::Config(format!(
            "{what} must be a non-empty rectangular matrix"
        )));
    }
    Ok(DMatrix::from_row_iterator(
        r,
        c,
        rows.iter().flatten().copied(),
    ))
}

fn offset(o: &Option<Vec<f64>>, set: &DecisionSet) -> Result<Point> {
    match o {
        Some(v) => Point::new(v.clone()),
        None => Ok(Point::zeros(set.dim())),
    }
}

impl ProblemSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::QuadraticTracking { .. } => "quadratic_tracking",
            ProblemSpec::Rotation { .. } => "rotation",
            ProblemSpec::ConvexOpt { .. } => "convex_opt",
            ProblemSpec::MatrixGame { .. } => "matrix_game",
            ProblemSpec::LinearVi { .. } => "linear_vi",
            ProblemSpec::Predictable { .. } => "predictable",
            ProblemSpec::Imitation { .. } => "imitation",
        }
    }

    /// `horizon` sizes the pre-generated drift of predictable sequences.
    pub fn build(&self, horizon: usize) -> Result<BuiltProblem> {
        Ok(match self {
            ProblemSpec::QuadraticTracking {
                alpha,
                lambda,
                coupling,
                offset: o,
                set,
            } => {
                let qt = match (lambda, coupling) {
                    (Some(l), None) => {
                        QuadraticTracking::new(*alpha, *l, offset(o, set)?, set.clone())?
                    }
                    (None, Some(k)) => QuadraticTracking::with_matrix(
                        *alpha,
                        matrix(k, "coupling")?,
                        offset(o, set)?,
                        set.clone(),
                    )?,
                    _ => {
                        return Err(ColError::Config(
                            "quadratic_tracking needs exactly one of `lambda` and `coupling`"
                                .into(),
                        ))
                    }
                };
                BuiltProblem::Stationary(Box::new(qt))
            }
            ProblemSpec::Rotation {
                alpha,
                angle_degrees,
                set,
            } => BuiltProblem::Stationary(Box::new(QuadraticTracking::rotation(
                *alpha,
                angle_degrees.to_radians(),
                set.clone(),
            )?)),
            ProblemSpec::ConvexOpt { objective, set } => {
                BuiltProblem::Equilibrium(EpBifunction::convex_opt(objective.clone(), set.clone())?)
            }
            ProblemSpec::MatrixGame { payoff } => {
                BuiltProblem::Equilibrium(EpBifunction::matrix_game(matrix(payoff, "payoff")?)?)
            }
            ProblemSpec::LinearVi { m, q, set } => BuiltProblem::Equilibrium(
                EpBifunction::linear_vi(matrix(m, "m")?, q.clone(), set.clone())?,
            ),
            ProblemSpec::Predictable {
                alpha,
                lambda,
                offset: o,
                set,
                drift,
                drift_seed,
            } => {
                let base = QuadraticTracking::new(*alpha, *lambda, offset(o, set)?, set.clone())?;
                BuiltProblem::Predictable(PredictableSequence::new(
                    base,
                    *drift,
                    horizon,
                    *drift_seed,
                )?)
            }
            ProblemSpec::Imitation {
                states,
                actions,
                episode_length,
                mdp_seed,
                expert_seed,
                mdp_file,
                mu,
            } => {
                let mdp = match mdp_file {
                    Some(path) => {
                        let mdp = TabularMdp::parse(&std::fs::read_to_string(path)?)?;
                        if mdp.states() != *states
                            || mdp.actions() != *actions
                            || mdp.horizon() != *episode_length
                        {
                            return Err(ColError::Config(format!(
                                "{path} is {}x{}x{}, config says {states}x{actions}x{episode_length}",
                                mdp.states(),
                                mdp.actions(),
                                mdp.horizon()
                            )));
                        }
                        mdp
                    }
                    None => TabularMdp::random(*states, *actions, *episode_length, *mdp_seed)?,
                };
                let expert = Policy::random(*states, *actions, *expert_seed);
                BuiltProblem::Stationary(Box::new(ImitationProblem::new(
                    mdp, expert, *mu, *mdp_seed,
                )?))
            }
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ColError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ColError::Config(e.to_string()))
    }

    /// Checks the config and builds its problem. Every algorithm plays one
    /// dry round so inconsistencies (entropy geometry on a box, stochastic
    /// feedback for a best-response method, ...) surface before any cell runs.
    pub fn validate(&self) -> Result<BuiltProblem> {
        if self.version != CONFIG_VERSION {
            return Err(ColError::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        if self.horizon == 0 {
            return Err(ColError::Config("horizon must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(ColError::Config("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ColError::Config("seeds must be distinct".into()));
        }
        if self.algorithms.is_empty() {
            return Err(ColError::Config(
                "at least one [[algorithms]] entry is required".into(),
            ));
        }
        if self.output.row_stride == 0 {
            return Err(ColError::Config("output.row_stride must be >= 1".into()));
        }
        if !(self.oracle.tol.is_finite() && self.oracle.tol > 0.0) {
            return Err(ColError::Config("oracle.tol must be > 0".into()));
        }
        if self.oracle.grid_points_per_dim < 2 {
            return Err(ColError::Config(
                "oracle.grid_points_per_dim must be >= 2".into(),
            ));
        }
        let built = self.problem.build(self.horizon)?;
        let env = built.environment();
        let opts = self.run_options(None)?;
        let feedback = self.feedback.spec();
        for kind in &self.algorithms {
            run(kind, &env, &feedback, 1, 0, &opts)
                .map_err(|e| ColError::Config(format!("algorithm {}: {e}", kind.name())))?;
        }
        Ok(built)
    }

    pub(crate) fn run_options(
        &self,
        equilibrium: Option<crate::oracles::EquilibriumCertificate>,
    ) -> Result<RunOptions> {
        let start = self.start.clone().map(Point::new).transpose()?;
        Ok(RunOptions {
            start,
            tol: Some(self.oracle.tol),
            equilibrium,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const QT: &str = r#"
version = 1
name = "qt"
horizon = 20
seeds = [1, 2, 3]
start = [1.0, 0.0]

[problem]
family = "quadratic_tracking"
alpha = 2.0
lambda = 0.5
set = { kind = "box", lower = [-1.0, -1.0], upper = [1.0, 1.0] }

[[algorithms]]
kind = "greedy"

[[algorithms]]
kind = "mirror_descent"
schedule = { kind = "constant", eta = 0.2 }
"#;

    #[test]
    fn round_trips_losslessly() {
        let cfg = ExperimentConfig::from_toml(QT).unwrap();
        assert_eq!(
            ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(),
            cfg
        );
        assert_eq!(cfg.oracle, OracleConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let cfg = ExperimentConfig::from_toml(QT).unwrap();
        let mut c = cfg.clone();
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = cfg.clone();
        c.algorithms = vec![AlgorithmKind::MirrorDescent {
            geometry: crate::geometry::BregmanGeometry::Entropy,
            schedule: crate::algorithms::StepSchedule::Constant { eta: 0.1 },
        }];
        assert!(c.validate().is_err());
        let mut c = cfg.clone();
        c.feedback.noise = Some(NoiseModel::Gaussian { sigma: 0.1 });
        assert!(
            c.validate().is_err(),
            "greedy cannot take stochastic feedback"
        );
        let mut c = cfg;
        c.version = 2;
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_toml(
            &QT.replace("horizon = 20", "horizon = 20\nbogus = 1")
        )
        .is_err());
    }
}
