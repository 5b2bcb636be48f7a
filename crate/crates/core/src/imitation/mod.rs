//! Tabular imitation learning posed as a continuous online learning problem.

mod mdp;
mod policy;
mod problem;

pub use mdp::{TabularMdp, MAX_ACTIONS, MAX_HORIZON, MAX_STATES};
pub use policy::Policy;
pub use problem::{il_convergence_check, IlConvergence, ImitationProblem};
