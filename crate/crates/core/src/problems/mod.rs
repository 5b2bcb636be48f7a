//! Benchmark COL instances.

mod ep;
mod predictable;
mod quadratic;

pub use ep::{ConvexFn, EpBifunction, EpSource};
pub use predictable::{DriftSchedule, PredictableSequence, TiltedRound};
pub use quadratic::{Coupling, QuadraticTracking};
