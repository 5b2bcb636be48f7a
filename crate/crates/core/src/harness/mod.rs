//! Experiment configuration, orchestration, sweeps and property suites.

mod config;
mod experiment;
mod suites;
mod sweep;

pub use config::{
    BuiltProblem, ExperimentConfig, FeedbackConfig, OracleConfig, OutputConfig, ProblemSpec,
    CONFIG_VERSION,
};
pub use experiment::{
    cell_name, cell_seed, read_summary, row_statistics, run_experiment, summarize_dir,
    write_summary, CellSummary, Experiment, ExperimentReport, CONFIG_FILE, SUMMARY_FILE,
};
pub use suites::{check_suite, CheckResult, SuiteReport, SUITES};
pub use sweep::{apply_point, grid_points, parse_grid, run_sweep, GridAxis, MAX_AXES, MAX_POINTS};
