//! A small from-scratch CNN stack: convolution, max-pooling, ReLU, dense,
//! dropout and softmax cross-entropy, each with an exact backward pass.

pub mod error;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod model;
pub mod tensor;

pub use error::{NnError, Result};
pub use init::{init_params, InitScheme, ModelParams};
pub use layers::ConvGeometry;
pub use model::{LayerSpec, Model, ModelSpec, ParamSlot, Pass};
pub use tensor::Tensor4;

pub type Tensor = Tensor4<f64>;
pub type Params = ModelParams<f64>;
