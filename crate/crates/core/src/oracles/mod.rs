//! Best responses, equilibria and residuals.

mod equilibrium;
mod residuals;
mod solver;

pub use equilibrium::{
    find_equilibrium, find_equilibrium_with, EquilibriumCertificate, EquilibriumMethod,
    EquilibriumOptions,
};
pub use residuals::{dual_residual, dvi_residual, ResidualMethod};
pub use solver::{best_response, gap};
