//! Continuous online learning: bifunction losses, the update rules that play
//! against them, and the oracles and regret ledgers used to check them.

pub mod algorithms;
pub mod col;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod imitation;
pub mod metrics;
pub mod oracles;
pub mod problems;
pub mod tolerance;

pub use error::{ColError, Result};
