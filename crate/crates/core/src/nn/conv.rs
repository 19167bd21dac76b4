use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Saved input of a full-height convolution, stored frame-major so that the
/// `d·k` values under a kernel are contiguous.
#[derive(Debug, Clone)]
pub struct ConvCache {
    frames: Vec<f64>,
    dims: usize,
    len: usize,
    width: usize,
    /// Output columns whose window touches a non-zero frame. Columns past this
    /// see only trailing zero padding and equal the bias.
    active: usize,
}

impl ConvCache {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn output_len(&self) -> usize {
        self.len - self.width + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    /// `d × s`; only filled when requested.
    pub input: Option<RealMatrix>,
    pub kernels: RealMatrix,
    pub bias: Vec<f64>,
}

/// Valid cross-correlation of a `d × s` input with `n` kernels spanning all
/// `d` rows and `width` frames.
///
/// `kernels` is `n × (d·width)`; row `c` holds kernel `c` flattened frame by
/// frame, so entry `j·d + i` weights feature `i` at window offset `j`:
///
/// `out[c, t] = bias[c] + Σ_i Σ_j input[i, t + j] · kernels[c, j·d + i]`
pub fn conv_full_height_forward(
    input: &RealMatrix,
    kernels: &RealMatrix,
    bias: &[f64],
    width: usize,
) -> Result<(RealMatrix, ConvCache)> {
    let (d, s) = input.shape();
    let n = kernels.rows();
    if width == 0 || width > s {
        return Err(Error::KernelTooWide { width, len: s });
    }
    if kernels.cols() != d * width || bias.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "kernels {}x{} / bias {} for d={d}, width={width}",
            kernels.rows(),
            kernels.cols(),
            bias.len()
        )));
    }
    let mut frames = vec![0.0; d * s];
    for i in 0..d {
        for (t, v) in input.row(i).iter().enumerate() {
            frames[t * d + i] = *v;
        }
    }
    let out_len = s - width + 1;
    let last_nonzero = (0..s).rev().find(|&t| frames[t * d..(t + 1) * d].iter().any(|&v| v != 0.0));
    let active = last_nonzero.map_or(0, |t| (t + 1).min(out_len));

    let mut out = RealMatrix::zeros(n, out_len);
    if active > 0 {
        // out[:, :active] = K (n × dk) · windows (dk × active), where window
        // column t starts at frames[t·d] with unit row stride.
        unsafe {
            matrixmultiply::dgemm(
                n,
                d * width,
                active,
                1.0,
                kernels.as_slice().as_ptr(),
                (d * width) as isize,
                1,
                frames.as_ptr(),
                1,
                d as isize,
                0.0,
                out.as_mut_slice().as_mut_ptr(),
                out_len as isize,
                1,
            );
        }
    }
    for (c, b) in bias.iter().enumerate() {
        out.row_mut(c).iter_mut().for_each(|v| *v += b);
    }
    Ok((
        out,
        ConvCache {
            frames,
            dims: d,
            len: s,
            width,
            active,
        },
    ))
}

/// Gradients of a scalar loss given `upstream = ∂L/∂out` (`n × (s−width+1)`).
pub fn conv_full_height_backward(
    cache: &ConvCache,
    kernels: &RealMatrix,
    upstream: &RealMatrix,
    want_input_grad: bool,
) -> Result<ConvGrads> {
    let mut kgrad = RealMatrix::zeros(kernels.rows(), kernels.cols());
    let mut bgrad = vec![0.0; kernels.rows()];
    accumulate_conv_param_grads(cache, upstream, &mut kgrad, &mut bgrad)?;
    let input = want_input_grad.then(|| {
        let d = cache.dims;
        let dk = d * cache.width;
        let mut gframes = vec![0.0; d * cache.len];
        for c in 0..kernels.rows() {
            let kernel = kernels.row(c);
            for (t, &g) in upstream.row(c).iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                for (dst, w) in gframes[t * d..t * d + dk].iter_mut().zip(kernel) {
                    *dst += g * w;
                }
            }
        }
        let mut m = RealMatrix::zeros(d, cache.len);
        for t in 0..cache.len {
            for i in 0..d {
                m.set(i, t, gframes[t * d + i]);
            }
        }
        m
    });
    Ok(ConvGrads {
        input,
        kernels: kgrad,
        bias: bgrad,
    })
}

/// Adds `∂L/∂kernels` and `∂L/∂bias` into existing accumulators.
pub(crate) fn accumulate_conv_param_grads(
    cache: &ConvCache,
    upstream: &RealMatrix,
    kgrad: &mut RealMatrix,
    bgrad: &mut [f64],
) -> Result<()> {
    let out_len = cache.output_len();
    let n = kgrad.rows();
    let dk = cache.dims * cache.width;
    if upstream.shape() != (n, out_len) || kgrad.cols() != dk || bgrad.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "upstream {:?} for conv output {n}x{out_len}",
            upstream.shape()
        )));
    }
    for (c, b) in bgrad.iter_mut().enumerate() {
        *b += upstream.row(c).iter().sum::<f64>();
    }
    if cache.active > 0 {
        // dK += dZ[:, :active] (n × active) · windowsᵀ (active × dk)
        unsafe {
            matrixmultiply::dgemm(
                n,
                cache.active,
                dk,
                1.0,
                upstream.as_slice().as_ptr(),
                out_len as isize,
                1,
                cache.frames.as_ptr(),
                cache.dims as isize,
                1,
                1.0,
                kgrad.as_mut_slice().as_mut_ptr(),
                dk as isize,
                1,
            );
        }
    }
    Ok(())
}
