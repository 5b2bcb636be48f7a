//! Regret accounting and inequality checkers over run traces.

mod checks;
mod regret;
mod trace;

pub use checks::{
    best_response_contraction_margin, best_response_drift, bregman_contraction,
    check_theorem_bounds, distance_ratios, last_decade_slope, log_checkpoints, loglog_slope,
    monotonicity_margin, path_variation, strongly_convex_set_margin, window_slope, Bound,
    BoundReport, RatioReport,
};
pub use regret::{
    averaged_iterate, dynamic_regret, static_regret, weighted_static_regret, CumulativeLoss,
};
pub use trace::{
    header as trace_header, parse_trace_csv, RoundDetail, RunContext, RunTrace, TraceRow,
};
