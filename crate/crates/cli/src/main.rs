use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use col_core::harness::{
    check_suite, parse_grid, run_experiment, run_sweep, summarize_dir, CellSummary,
    ExperimentConfig,
};
use col_core::{ColError, Result};

/// Continuous online learning experiments.
#[derive(Parser)]
#[command(name = "col", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) cell of an experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; falls back to `output.dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named property suite.
    Check {
        #[arg(long)]
        suite: String,
    },
    /// Run an experiment once per point of a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `key=v1,v2;other.key=v3`
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the summary table from the trace CSVs in a directory.
    Summarize {
        #[arg(long)]
        dir: PathBuf,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Ok(s) = std::env::var("COL_SEED") {
        cfg.master_seed = s
            .trim()
            .parse()
            .map_err(|_| ColError::Config(format!("COL_SEED `{s}` is not a u64")))?;
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<PathBuf> {
    out.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| ColError::Config("no output directory: pass --out or set output.dir".into()))
}

fn print_cells(cells: &[CellSummary]) {
    for c in cells {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "{:<32} regret {:>11} slope {:>11} slack+ {:>11} slack- {:>11} {}",
            c.cell,
            f(c.dynamic_regret),
            f(c.dynamic_slope),
            f(c.min_slack_upper),
            f(c.min_slack_lower),
            c.status
        );
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out)?;
            let report = run_experiment(&cfg, &dir)?;
            print_cells(&report.cells);
            println!("wrote {} cells to {}", report.cells.len(), dir.display());
            Ok(0)
        }
        Command::Check { suite } => {
            let report = check_suite(&suite)?;
            println!("{report}");
            Ok(if report.passed() {
                0
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::Sweep { config, grid, out } => {
            let cfg = load(&config)?;
            let axes = parse_grid(&grid)?;
            let dir = out_dir(&cfg, out)?;
            let reports = run_sweep(&cfg, &axes, &dir)?;
            for r in &reports {
                println!("{}", r.out_dir.display());
                print_cells(&r.cells);
            }
            Ok(0)
        }
        Command::Summarize { dir } => {
            let cells = summarize_dir(&dir)?;
            let mut out = csv::Writer::from_writer(std::io::stdout());
            for c in &cells {
                out.serialize(c)
                    .map_err(|e| ColError::Config(e.to_string()))?;
            }
            out.flush()?;
            Ok(0)
        }
    }
}
