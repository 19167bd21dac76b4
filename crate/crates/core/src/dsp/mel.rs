use std::f64::consts::PI;

use super::{FrameConfig, FLOOR_EPS};
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// HTK Mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with centers equally spaced in Mel between `mel_fmin`
/// and `mel_fmax`, evaluated at the FFT bin frequencies. Rows are filters,
/// columns are the `fft_size/2 + 1` one-sided bins.
pub fn mel_filterbank(cfg: &FrameConfig, sample_rate: u32) -> Result<RealMatrix> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if cfg.mel_fmax > nyquist {
        return Err(Error::InvalidRange(format!("fmax {} exceeds Nyquist {nyquist}", cfg.mel_fmax)));
    }
    if !(cfg.mel_fmin >= 0.0 && cfg.mel_fmin < cfg.mel_fmax) {
        return Err(Error::InvalidRange(format!("fmin {} must be below fmax {}", cfg.mel_fmin, cfg.mel_fmax)));
    }
    let bins = cfg.fft_size / 2 + 1;
    let lo = hz_to_mel(cfg.mel_fmin);
    let hi = hz_to_mel(cfg.mel_fmax);
    let step = (hi - lo) / (cfg.num_mel + 1) as f64;
    let edges: Vec<f64> = (0..cfg.num_mel + 2)
        .map(|i| mel_to_hz(lo + step * i as f64))
        .collect();
    let bin_hz = f64::from(sample_rate) / cfg.fft_size as f64;

    let mut fb = RealMatrix::zeros(cfg.num_mel, bins);
    for m in 0..cfg.num_mel {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let w = if f > left && f <= center {
                (f - left) / (center - left)
            } else if f > center && f < right {
                (right - f) / (right - center)
            } else {
                0.0
            };
            fb.set(m, k, w);
        }
    }
    Ok(fb)
}

/// `ln(max(filterbank · spectrum, FLOOR_EPS))` per filter.
pub fn log_mel(power_spec: &[f64], filterbank: &RealMatrix) -> Result<Vec<f64>> {
    if power_spec.len() != filterbank.cols() {
        return Err(Error::DimensionMismatch {
            expected: filterbank.cols(),
            found: power_spec.len(),
        });
    }
    Ok((0..filterbank.rows())
        .map(|m| {
            let e: f64 = filterbank
                .row(m)
                .iter()
                .zip(power_spec)
                .map(|(w, p)| w * p)
                .sum();
            e.max(FLOOR_EPS).ln()
        })
        .collect())
}

/// Orthonormal DCT-II of `x`.
pub fn dct_ii_orthonormal(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos())
                .sum();
            scale * s
        })
        .collect()
}

/// Cepstral coefficients `1..=num_mfcc` of a log Mel vector (or `0..num_mfcc`
/// when `include_c0`).
pub fn mfcc(logmel: &[f64], num_mfcc: usize, include_c0: bool) -> Result<Vec<f64>> {
    let first = usize::from(!include_c0);
    if first + num_mfcc > logmel.len() {
        return Err(Error::DimensionMismatch {
            expected: first + num_mfcc,
            found: logmel.len(),
        });
    }
    let c = dct_ii_orthonormal(logmel);
    Ok(c[first..first + num_mfcc].to_vec())
}
