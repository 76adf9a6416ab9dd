//! Dense-tensor neural-network kernels for the denoising autoencoder: 1D
//! convolution and transposed convolution, ReLU, batch normalization,
//! sigmoid, RMSE loss, reverse-mode gradients, and Adam.

pub mod adam;
pub mod gemm;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod model;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use layers::{BatchNorm1d, Conv1d, ConvTranspose1d, Mode, Relu, Sigmoid};
pub use loss::rmse_loss;
pub use model::{DaeArchitecture, DaeModel};
pub use tensor::{NnError, Tensor};
