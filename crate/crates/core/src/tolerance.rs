//! Repo-wide numerical tolerances. Tests, checkers and oracles read these
//! constants instead of inlining literals.

/// Agreement required of exact operations (projection idempotence, identities).
pub const EXACT: f64 = 1e-12;

/// Slack allowed on inequality checks evaluated in floating point.
pub const INEQUALITY: f64 = 1e-9;

/// Agreement between an operation and a grid-search oracle.
pub const GRID: f64 = 1e-3;

/// Floor applied to simplex coordinates before evaluating the entropy mirror map.
pub const ENTROPY_FLOOR: f64 = 1e-12;

/// Denominators below this are treated as zero when forming per-step ratios.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Default target accuracy of the inner best-response solver.
pub const ORACLE: f64 = 1e-10;

/// Default number of grid points per intrinsic dimension for grid oracles.
pub const GRID_POINTS_PER_DIM: usize = 101;
