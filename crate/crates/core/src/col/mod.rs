mod bifunction;
mod feedback;
mod regularity;

pub(crate) use bifunction::check_query;
pub use bifunction::{
    estimate_regularity, gradient_check, loss_at, operator, Bifunction, DecisionForm,
};
pub use feedback::{
    Adversary, BiasSchedule, FeedbackChannel, FeedbackSpec, NoiseModel, Observation,
};
pub use regularity::{Certified, Regularity};
