use crate::error::{Error, Result};

/// `floor((len - pool) / stride) + 1`, or 0 when the map is shorter than a window.
pub fn pooled_len(len: usize, pool: usize, stride: usize) -> usize {
    if len < pool || stride == 0 {
        0
    } else {
        (len - pool) / stride + 1
    }
}

/// Max over windows `[t·stride, t·stride + pool)`. Returns the maxima and the
/// absolute index of each, taking the leftmost position on ties.
pub fn maxpool1d_forward(map: &[f64], pool: usize, stride: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if pool == 0 || stride == 0 {
        return Err(Error::InvalidConfig("pool size and stride must be positive".into()));
    }
    if map.len() < pool {
        return Err(Error::MapTooShort { len: map.len(), pool });
    }
    let out_len = pooled_len(map.len(), pool, stride);
    let mut out = Vec::with_capacity(out_len);
    let mut arg = Vec::with_capacity(out_len);
    for t in 0..out_len {
        let start = t * stride;
        let mut best = start;
        for i in start + 1..start + pool {
            if map[i] > map[best] {
                best = i;
            }
        }
        out.push(map[best]);
        arg.push(best);
    }
    Ok((out, arg))
}

/// Routes each upstream value to its argmax, summing where windows share one.
pub fn maxpool1d_backward(argmax: &[usize], upstream: &[f64], input_len: usize) -> Vec<f64> {
    let mut grad = vec![0.0; input_len];
    for (&i, &g) in argmax.iter().zip(upstream) {
        grad[i] += g;
    }
    grad
}
