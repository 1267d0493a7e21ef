//! Small CPU neural-network kernel: tensors, a differentiable graph that
//! supports gradients of gradients, feed-forward networks and Adam.

mod adam;
mod graph;
pub mod kernels;
mod net;
mod tensor;
pub mod weights;

pub use adam::{AdamConfig, AdamState};
pub use graph::{Graph, Var};
pub use net::{Gradients, Layer, NetSpec, Params, Trace};
pub use tensor::Tensor;
