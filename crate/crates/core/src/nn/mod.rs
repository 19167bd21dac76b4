//! Forward and analytic backward passes for the layers the attentive CNN is
//! built from. Everything is `f64`.

mod activation;
mod attention;
mod conv;
mod dropout;
mod gradcheck;
mod linear;
mod loss;
mod params_io;
mod pool;

use serde::{Deserialize, Serialize};

use crate::matrix::RealMatrix;

pub use activation::{activation_backward, activation_forward, relu_backward, relu_forward, Activation};
pub use attention::{attention_backward, attention_forward, AttentionCache, AttentionGrads};
pub use conv::{conv_full_height_backward, conv_full_height_forward, ConvCache, ConvGrads};
pub use dropout::{dropout_backward, dropout_forward};
pub use gradcheck::{grad_check, BlockError, GradCheckOptions, GradCheckReport};
pub use linear::{linear_backward, linear_forward, LinearGrads};
pub use loss::{softmax, softmax_cross_entropy};
pub use params_io::{decode_params, encode_params, read_params, write_params};
pub use pool::{maxpool1d_backward, maxpool1d_forward, pooled_len};

pub(crate) use conv::accumulate_conv_param_grads;
pub(crate) use linear::linear_backward_into;

/// A trainable tensor and its gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTensor {
    pub value: RealMatrix,
    pub grad: RealMatrix,
}

impl ParamTensor {
    pub fn new(value: RealMatrix) -> Self {
        let grad = RealMatrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(RealMatrix::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}
