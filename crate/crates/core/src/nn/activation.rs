use serde::{Deserialize, Serialize};

/// Nonlinearity applied after convolution and bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    None,
}

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Masks `upstream` by `x > 0`, where `x` is the forward input.
pub fn relu_backward(x: &[f64], upstream: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(upstream)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect()
}

pub fn activation_forward(act: Activation, x: &mut [f64]) {
    match act {
        Activation::Relu => x.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Tanh => x.iter_mut().for_each(|v| *v = v.tanh()),
        Activation::None => {}
    }
}

/// In-place backward given the activation *output* `y`.
pub fn activation_backward(act: Activation, y: &[f64], grad: &mut [f64]) {
    match act {
        Activation::Relu => grad
            .iter_mut()
            .zip(y)
            .for_each(|(g, &v)| if v <= 0.0 { *g = 0.0 }),
        Activation::Tanh => grad.iter_mut().zip(y).for_each(|(g, &v)| *g *= 1.0 - v * v),
        Activation::None => {}
    }
}
