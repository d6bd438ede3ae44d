//! Optimizers over flat parameter vectors.

mod adam;
mod lbfgs;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsReport, LbfgsState, StepInfo, Termination};
