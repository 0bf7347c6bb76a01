//! Dense `f64` numerics used by the models: a row-major matrix, activations,
//! losses with analytic gradients, Adam and the seeded RNG.

mod activation;
mod adam;
mod loss;
mod matrix;
mod rng;

pub use activation::{relu, relu_grad, sigmoid, sigmoid_grad, tanh, tanh_grad};
pub use adam::{AdamConfig, AdamState};
pub use loss::{bce_loss, bce_with_logits, focal_loss, focal_with_logits, LossKind, LossValue, PROB_CLAMP};
pub use matrix::Matrix;
pub use rng::SeededRng;
