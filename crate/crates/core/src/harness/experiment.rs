use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BuiltProblem, ExperimentConfig};
use crate::algorithms::run;
use crate::error::{ColError, Result};
use crate::metrics::{
    check_theorem_bounds, last_decade_slope, parse_trace_csv, Bound, RunTrace, TraceRow,
};
use crate::oracles::{find_equilibrium_with, EquilibriumCertificate};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.toml";

/// One row of `summary.csv`. Missing quantities are written as empty fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: String,
    pub problem: String,
    pub algorithm: String,
    pub seed: u64,
    pub rounds: usize,
    pub dynamic_regret: Option<f64>,
    pub static_regret: Option<f64>,
    pub dynamic_slope: Option<f64>,
    pub static_slope: Option<f64>,
    pub min_slack_upper: Option<f64>,
    pub min_slack_lower: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub cells: Vec<CellSummary>,
}

impl ExperimentReport {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.status == "ok")
    }
}

/// Independent RNG stream per cell, fixed by (master seed, algorithm index,
/// run seed) and not by scheduling order.
pub fn cell_seed(master: u64, algorithm: usize, seed: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ algorithm as u64) ^ seed)
}

pub fn cell_name(algorithm_index: usize, algorithm: &str, seed: u64) -> String {
    format!("{algorithm_index:02}_{algorithm}_seed{seed}")
}

/// Regrets and slopes from the rows of a trace. Both `run_experiment` and
/// `summarize_dir` go through here, so the summary is recomputable offline.
pub fn row_statistics(rows: &[TraceRow]) -> (Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
    let last = rows.last();
    let series = |f: fn(&TraceRow) -> f64| -> Vec<(usize, f64)> {
        rows.iter().map(|r| (r.n, f(r))).collect()
    };
    (
        last.map(|r| r.dynamic_regret_cum),
        last.map(|r| r.static_regret_cum),
        last_decade_slope(&series(|r| r.dynamic_regret_cum)),
        last_decade_slope(&series(|r| r.static_regret_cum)),
    )
}

/// A validated config with its problem built and reference equilibrium
/// solved once, shared by every cell.
pub struct Experiment<'c> {
    config: &'c ExperimentConfig,
    built: BuiltProblem,
    equilibrium: Option<std::result::Result<EquilibriumCertificate, String>>,
}

impl<'c> Experiment<'c> {
    pub fn prepare(config: &'c ExperimentConfig) -> Result<Self> {
        let built = config.validate()?;
        let equilibrium = config.oracle.equilibrium.then(|| {
            find_equilibrium_with(built.reference(), &config.oracle.equilibrium_options())
                .map_err(|e| e.to_string())
        });
        Ok(Experiment {
            config,
            built,
            equilibrium,
        })
    }

    pub fn built(&self) -> &BuiltProblem {
        &self.built
    }

    pub fn equilibrium(&self) -> Option<&EquilibriumCertificate> {
        self.equilibrium.as_ref().and_then(|e| e.as_ref().ok())
    }

    /// The full in-memory trace of one cell, seeded exactly as in
    /// `run_experiment`.
    pub fn trace(&self, algorithm: usize, seed: u64) -> Result<RunTrace> {
        let kind = self
            .config
            .algorithms
            .get(algorithm)
            .ok_or_else(|| ColError::Config(format!("no algorithm #{algorithm}")))?;
        let opts = self.config.run_options(self.equilibrium().cloned())?;
        run(
            kind,
            &self.built.environment(),
            &self.config.feedback.spec(),
            self.config.horizon,
            cell_seed(self.config.master_seed, algorithm, seed),
            &opts,
        )
    }

    fn cell(&self, algorithm: usize, seed: u64, out_dir: &Path) -> Result<CellSummary> {
        let kind = &self.config.algorithms[algorithm];
        let name = cell_name(algorithm, kind.name(), seed);
        let mut summary = CellSummary {
            cell: name.clone(),
            problem: self.built.environment().label(),
            algorithm: kind.name().to_string(),
            seed,
            rounds: 0,
            dynamic_regret: None,
            static_regret: None,
            dynamic_slope: None,
            static_slope: None,
            min_slack_upper: None,
            min_slack_lower: None,
            status: "ok".into(),
        };
        if let Some(Err(msg)) = &self.equilibrium {
            summary.status = format!("equilibrium oracle failed: {msg}");
        }
        let trace = match self.trace(algorithm, seed) {
            Ok(t) => t,
            Err(e) => {
                summary.status = format!("run failed: {e}");
                return Ok(summary);
            }
        };
        let path = out_dir.join(format!("{name}.csv"));
        trace.write_csv_strided(
            BufWriter::new(File::create(&path)?),
            self.config.output.row_stride,
        )?;
        // summarize from what was written so offline recomputation agrees
        let rows = parse_trace_csv(File::open(&path)?)?;
        summary.rounds = trace.len();
        (
            summary.dynamic_regret,
            summary.static_regret,
            summary.dynamic_slope,
            summary.static_slope,
        ) = row_statistics(&rows);
        summary.min_slack_upper = check_theorem_bounds(&trace, Bound::DynamicUpper)
            .ok()
            .map(|r| r.min_slack);
        summary.min_slack_lower = check_theorem_bounds(&trace, Bound::DynamicLower)
            .ok()
            .map(|r| r.min_slack);
        Ok(summary)
    }
}

/// Runs every (algorithm, seed) cell into `out_dir`, which receives one trace
/// CSV per cell, `summary.csv` and the resolved `config.toml`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let exp = Experiment::prepare(config)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(CONFIG_FILE), config.to_toml()?)?;
    let cells: Vec<(usize, u64)> = (0..config.algorithms.len())
        .flat_map(|a| config.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let summaries = cells
        .par_iter()
        .map(|&(a, seed)| exp.cell(a, seed, out_dir))
        .collect::<Result<Vec<_>>>()?;
    write_summary(&out_dir.join(SUMMARY_FILE), &summaries)?;
    Ok(ExperimentReport {
        out_dir: out_dir.to_path_buf(),
        cells: summaries,
    })
}

pub fn write_summary(path: &Path, rows: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> ColError {
    ColError::Parse {
        line: e.position().map_or(0, |p| p.line() as usize),
        msg: e.to_string(),
    }
}

/// Recomputes regrets and slopes from the trace CSVs in `dir`. Columns that
/// need more than a trace (bound slacks, status, labels) are carried over
/// from an existing `summary.csv` when there is one.
pub fn summarize_dir(dir: &Path) -> Result<Vec<CellSummary>> {
    let previous: HashMap<String, CellSummary> = match read_summary(&dir.join(SUMMARY_FILE)) {
        Ok(rows) => rows.into_iter().map(|r| (r.cell.clone(), r)).collect(),
        Err(_) => HashMap::new(),
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_name().is_some_and(|f| f != SUMMARY_FILE)
        })
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let cell = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let rows = parse_trace_csv(File::open(&path)?)
            .map_err(|e| ColError::Config(format!("{}: {e}", path.display())))?;
        let (dynamic_regret, static_regret, dynamic_slope, static_slope) = row_statistics(&rows);
        let prev = previous.get(&cell);
        out.push(CellSummary {
            problem: prev.map(|p| p.problem.clone()).unwrap_or_default(),
            algorithm: prev.map(|p| p.algorithm.clone()).unwrap_or_default(),
            seed: prev.map_or(0, |p| p.seed),
            rounds: prev.map_or_else(|| rows.last().map_or(0, |r| r.n), |p| p.rounds),
            dynamic_regret,
            static_regret,
            dynamic_slope,
            static_slope,
            min_slack_upper: prev.and_then(|p| p.min_slack_upper),
            min_slack_lower: prev.and_then(|p| p.min_slack_lower),
            status: prev.map_or_else(|| "ok".into(), |p| p.status.clone()),
            cell,
        });
    }
    Ok(out)
}
