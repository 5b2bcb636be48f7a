//! Decision-update rules and the round loop.

mod run;
mod schedule;
mod steps;

pub use run::{run, AlgorithmKind, Environment, RunOptions};
pub use schedule::{Schedule, StepSchedule};
pub use steps::{
    greedy_step, lambda_trap_step, mann_step, midpoint_step, mirror_descent_step, AlgorithmState,
};
