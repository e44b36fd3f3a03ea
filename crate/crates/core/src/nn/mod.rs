//! Differentiable layer kernels: forward passes that return the activations
//! their backward passes need, and hand-written adjoints.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod init;
pub mod loss;
pub mod pool;
pub mod tensor;

pub use activation::{dropout_backward, dropout_forward, relu_backward, relu_forward, DropoutMask};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormParams};
pub use conv::{
    conv1d_backward, conv1d_forward, sepconv1d_backward, sepconv1d_forward, Conv1dCache,
    Conv1dParams, SepConvCache, SepConvParams,
};
pub use dense::{dense_backward, dense_forward, DenseParams};
pub use loss::{softmax, softmax_xent_backward, softmax_xent_forward};
pub use pool::{
    global_avg_pool_backward, global_avg_pool_forward, maxpool1d_backward, maxpool1d_forward,
    MaxPoolCache,
};
pub use tensor::{Matrix, Real, Tensor3};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch norm needs at least 2 values per channel in training mode, got {0}")]
    DegenerateBatch(usize),
    #[error("invalid layer parameters: {0}")]
    InvalidParams(String),
    #[error("label {0} is out of range")]
    LabelOutOfRange(usize),
}
