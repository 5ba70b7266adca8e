//! Minimal differentiable-network engine.
//!
//! Exactly the layer menu the pipeline needs: dense, strided valid-padding
//! conv2d, relu/tanh/sigmoid. Reverse-mode gradients are exact and verified
//! against central differences (`grad_check`). Generic over the float type:
//! gradient checks run in `f64`, training may run in `f32`.

mod adam;
mod checkpoint;
mod gradcheck;
mod layer;
mod network;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_params, save_params, spec_digest};
pub use gradcheck::{grad_check, grad_check_multi};
pub use layer::{Layer, LayerSpec};
pub use network::{polyak_blend, Cache, Gradients, Network};
pub use tensor::{Scalar, Tensor};

#[cfg(test)]
mod tests;
