use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub x: Vec<f64>,
    pub weight: RealMatrix,
    pub bias: Vec<f64>,
}

/// `weight · x + bias` with `weight` of shape `n × m`.
pub fn linear_forward(x: &[f64], weight: &RealMatrix, bias: &[f64]) -> Result<Vec<f64>> {
    if weight.cols() != x.len() || weight.rows() != bias.len() {
        return Err(Error::ShapeMismatch(format!(
            "weight {:?}, bias {}, input {}",
            weight.shape(),
            bias.len(),
            x.len()
        )));
    }
    Ok((0..weight.rows())
        .map(|r| bias[r] + weight.row(r).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect())
}

pub fn linear_backward(x: &[f64], weight: &RealMatrix, upstream: &[f64]) -> LinearGrads {
    let mut grads = LinearGrads {
        x: vec![0.0; x.len()],
        weight: RealMatrix::zeros(weight.rows(), weight.cols()),
        bias: vec![0.0; weight.rows()],
    };
    linear_backward_into(x, weight, upstream, &mut grads.weight, &mut grads.bias, Some(&mut grads.x));
    grads
}

/// Accumulating form of [`linear_backward`].
pub(crate) fn linear_backward_into(
    x: &[f64],
    weight: &RealMatrix,
    upstream: &[f64],
    w_grad: &mut RealMatrix,
    b_grad: &mut [f64],
    mut x_grad: Option<&mut [f64]>,
) {
    for (r, &g) in upstream.iter().enumerate() {
        b_grad[r] += g;
        if g == 0.0 {
            continue;
        }
        for (wg, v) in w_grad.row_mut(r).iter_mut().zip(x) {
            *wg += g * v;
        }
        if let Some(xg) = x_grad.as_deref_mut() {
            for (dst, w) in xg.iter_mut().zip(weight.row(r)) {
                *dst += g * w;
            }
        }
    }
}
