//! Minimal dense-network engine.
//!
//! Matrices, dense layers with ReLU/softmax heads, cross-entropy,
//! reverse-mode gradients, SGD/Adam, and a finite-difference oracle used by
//! the gradient tests. Everything is `f64` and bit-reproducible given a seed.

mod layer;
mod matrix;
mod mlp;
mod optim;

pub use layer::{cross_entropy, softmax, Activation, DenseLayer, PROB_FLOOR};
pub use matrix::Matrix;
pub use mlp::{init_params, Activations, GradientSet, LayerGradient, Mlp};
pub use optim::{
    adam_step, finite_difference_gradient, max_relative_error, sgd_step, AdamState, TrainConfig,
};
