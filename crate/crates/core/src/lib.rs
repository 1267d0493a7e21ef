// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affinity;
pub mod bench;
pub mod config;
pub mod dataset;
pub mod diffusion;
pub mod encoding;
pub mod error;
pub mod planner;
pub mod tensorad;
pub mod wgan;
pub mod workspace;

pub use error::{Error, Result};
