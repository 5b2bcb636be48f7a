mod bregman;
mod point;
mod set;

pub use bregman::BregmanGeometry;
pub(crate) use point::check_dim;
pub use point::{add, axpy, dist, dist_sq, dot, lerp, norm, norm_sq, scale, sub, Point};
pub use set::{project_unit_simplex, DecisionSet};
