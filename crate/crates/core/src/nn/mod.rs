//! Minimal CPU neural-network engine: 2-D convolution, dense and ReLU
//! layers, softmax cross-entropy, backpropagation and momentum SGD.
//!
//! Arithmetic runs in `f64`; parameters are written to disk as `f32`.
//! Batch-level work is split per sample across threads and reduced in
//! sample order, so results are bit-identical regardless of thread count.

pub mod gradcheck;
pub mod io;
mod layer;
mod loss;
mod network;
mod optim;
mod tensor;

pub use layer::{Activation, Layer, LayerSpec, MapShape};
pub use loss::{softmax, softmax_xent};
pub use network::{Gradients, Network, Tape};
pub use optim::{sgd_step, SgdState, TrainConfig};
pub use tensor::Tensor;

/// Analytic parameter count (weights plus biases) of a layer stack.
pub fn param_count(specs: &[LayerSpec]) -> usize {
    specs.iter().map(LayerSpec::param_count).sum()
}
