//! Physics-informed neural network training with encoder-mixing networks and
//! capped uncertainty-based loss weighting.

pub mod autodiff;
pub mod error;
pub mod harness;
pub mod network;
pub mod optim;
pub mod problems;
pub mod refcavity;
pub mod weighting;

pub use error::{Error, Result};
