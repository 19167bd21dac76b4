use super::loss::softmax;
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionCache {
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrads {
    /// Same `m × T` layout as the input.
    pub x: RealMatrix,
    pub score: Vec<f64>,
}

/// Softmax attention over the `T` columns of `x` (`m × T`) with linear
/// scores `score · x_t`. Returns the weighted sum `Σ α_t x_t` and the weights.
pub fn attention_forward(x: &RealMatrix, score: &[f64]) -> Result<(Vec<f64>, AttentionCache)> {
    let (m, t_len) = x.shape();
    if t_len == 0 {
        return Err(Error::EmptySequence);
    }
    if score.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: score.len(),
        });
    }
    let mut scores = vec![0.0; t_len];
    for (i, &u) in score.iter().enumerate() {
        for (s, &v) in scores.iter_mut().zip(x.row(i)) {
            *s += u * v;
        }
    }
    let alphas = softmax(&scores);
    let attended = (0..m)
        .map(|i| x.row(i).iter().zip(&alphas).map(|(v, a)| v * a).sum())
        .collect();
    Ok((attended, AttentionCache { alphas }))
}

/// Backward through both the weighted sum and the softmax over scores.
pub fn attention_backward(x: &RealMatrix, score: &[f64], cache: &AttentionCache, upstream: &[f64]) -> AttentionGrads {
    let (m, t_len) = x.shape();
    let alphas = &cache.alphas;
    // ∂L/∂α_t = upstream · x_t
    let mut d_alpha = vec![0.0; t_len];
    for (i, &g) in upstream.iter().enumerate() {
        for (da, &v) in d_alpha.iter_mut().zip(x.row(i)) {
            *da += g * v;
        }
    }
    let mean: f64 = alphas.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let d_score: Vec<f64> = alphas.iter().zip(&d_alpha).map(|(a, d)| a * (d - mean)).collect();

    let mut gx = RealMatrix::zeros(m, t_len);
    let mut gu = vec![0.0; m];
    for i in 0..m {
        let row = x.row(i);
        gu[i] = row.iter().zip(&d_score).map(|(v, s)| v * s).sum();
        let (up, u) = (upstream[i], score[i]);
        for ((g, a), s) in gx.row_mut(i).iter_mut().zip(alphas).zip(&d_score) {
            *g = up * a + s * u;
        }
    }
    AttentionGrads { x: gx, score: gu }
}
