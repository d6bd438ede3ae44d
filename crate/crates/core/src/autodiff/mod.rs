//! Reverse-mode gradients over a scalar tape, plus second-order jets in the
//! input coordinates that can be recorded on that tape.

mod jet;
mod tape;

pub use jet::{validate_pairs, Jet2, Scalar};
pub use tape::{grad_params, Adjoints, Tape, Var};
