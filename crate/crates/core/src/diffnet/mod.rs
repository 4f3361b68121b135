//! Minimal dense numerical core: matrices, MLP layers with hand-derived
//! gradients, loss primitives and an AdamW optimizer. All arithmetic is f64.

pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod matrix;
pub mod optim;

pub use gradcheck::{check_gradient, GradientCheck};
pub use layer::{sigmoid, Activation, Dense, DenseGrad, Mlp, MlpTrace};
pub use loss::{mse, mse_grad};
pub use matrix::Matrix;
pub use optim::{AdamW, AdamWConfig};
