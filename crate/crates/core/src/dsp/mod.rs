//! Frame-level acoustic features: log Mel filterbank energies, MFCCs and a
//! seven-row prosody track, plus per-speaker normalization.

mod feature;
mod mel;
mod norm;
mod pitch;
pub mod wav;

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use feature::{read_feature_file, write_feature_file, FeatureKind, FeatureMatrix};
pub use mel::{dct_ii_orthonormal, hz_to_mel, log_mel, mel_filterbank, mel_to_hz, mfcc};
pub use norm::{compute_speaker_stats, denormalize, normalize, SpeakerStats, STD_FLOOR};
pub use pitch::{estimate_f0, prosody_features, F0Estimate, PitchConfig, PROSODY_ROWS};

/// Floor applied before every logarithm.
pub const FLOOR_EPS: f64 = 1e-10;

/// The only sample rate the pipeline accepts.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Keeps at most the first `seconds` of audio.
    pub fn truncated(&self, seconds: f64) -> AudioClip {
        let n = (seconds * f64::from(self.sample_rate)).round() as usize;
        AudioClip {
            samples: self.samples[..n.min(self.samples.len())].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Seconds.
    pub frame_len: f64,
    /// Seconds.
    pub frame_shift: f64,
    pub fft_size: usize,
    pub num_mel: usize,
    pub num_mfcc: usize,
    /// Hz.
    pub mel_fmin: f64,
    /// Hz.
    pub mel_fmax: f64,
    /// Keep c0 and return coefficients 0..num_mfcc instead of 1..=num_mfcc.
    pub mfcc_include_c0: bool,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len: 0.025,
            frame_shift: 0.010,
            fft_size: 512,
            num_mel: 26,
            num_mfcc: 13,
            mel_fmin: 0.0,
            mel_fmax: 6500.0,
            mfcc_include_c0: false,
        }
    }
}

impl FrameConfig {
    pub fn frame_len_samples(&self, sample_rate: u32) -> usize {
        (self.frame_len * f64::from(sample_rate)).round() as usize
    }

    pub fn frame_shift_samples(&self, sample_rate: u32) -> usize {
        (self.frame_shift * f64::from(sample_rate)).round() as usize
    }

    /// Number of frames `frame_signal` yields for `n` samples (0 if `n` is
    /// shorter than one frame).
    pub fn frame_count(&self, n: usize, sample_rate: u32) -> usize {
        let len = self.frame_len_samples(sample_rate);
        let shift = self.frame_shift_samples(sample_rate);
        if n < len {
            0
        } else {
            (n - len) / shift + 1
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let len = self.frame_len_samples(sample_rate);
        let shift = self.frame_shift_samples(sample_rate);
        if len == 0 || shift == 0 {
            return Err(Error::InvalidConfig("frame length and shift must be at least one sample".into()));
        }
        if shift > len {
            return Err(Error::InvalidConfig(format!("frame shift {shift} exceeds frame length {len}")));
        }
        if self.fft_size < len {
            return Err(Error::InvalidConfig(format!("fft size {} is shorter than a frame ({len})", self.fft_size)));
        }
        if self.num_mel == 0 {
            return Err(Error::InvalidConfig("need at least one Mel filter".into()));
        }
        let dct_max = if self.mfcc_include_c0 { self.num_mfcc } else { self.num_mfcc + 1 };
        if self.num_mfcc == 0 || dct_max > self.num_mel {
            return Err(Error::InvalidConfig(format!(
                "{} MFCCs cannot be taken from {} Mel bands",
                self.num_mfcc, self.num_mel
            )));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        if !(self.mel_fmin >= 0.0 && self.mel_fmin < self.mel_fmax) {
            return Err(Error::InvalidRange(format!("fmin {} must be below fmax {}", self.mel_fmin, self.mel_fmax)));
        }
        if self.mel_fmax > nyquist {
            return Err(Error::InvalidRange(format!("fmax {} exceeds Nyquist {nyquist}", self.mel_fmax)));
        }
        Ok(())
    }
}

/// Splits a clip into contiguous frames. The tail remainder that does not fill
/// a whole frame is dropped.
pub fn frame_signal(clip: &AudioClip, cfg: &FrameConfig) -> Result<Vec<Vec<f64>>> {
    let len = cfg.frame_len_samples(clip.sample_rate);
    let shift = cfg.frame_shift_samples(clip.sample_rate);
    if len == 0 || shift == 0 {
        return Err(Error::InvalidConfig("frame length and shift must be at least one sample".into()));
    }
    if clip.samples.len() < len {
        return Err(Error::ClipTooShort {
            samples: clip.samples.len(),
            frame_len: len,
        });
    }
    let count = (clip.samples.len() - len) / shift + 1;
    Ok((0..count)
        .map(|i| clip.samples[i * shift..i * shift + len].to_vec())
        .collect())
}

/// Symmetric Hamming window, `0.54 - 0.46 cos(2πk/(n-1))`. A single-point
/// window is `[1.0]`.
pub fn hamming_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
        .collect()
}

/// One-sided power spectrum `|X[k]|²`, `k = 0..=fft_size/2`, of a frame
/// zero-padded to `fft_size`.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Result<Vec<f64>> {
    if frame.len() > fft_size {
        return Err(Error::DimensionMismatch {
            expected: fft_size,
            found: frame.len(),
        });
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    Ok(power_spectrum_with(&*fft, frame, &mut buf))
}

fn power_spectrum_with(fft: &dyn Fft<f64>, frame: &[f64], buf: &mut [Complex<f64>]) -> Vec<f64> {
    for (i, b) in buf.iter_mut().enumerate() {
        *b = Complex::new(frame.get(i).copied().unwrap_or(0.0), 0.0);
    }
    fft.process(buf);
    buf[..buf.len() / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

/// Holds the window, FFT plan, filterbank and DCT setup for one
/// `(FrameConfig, sample_rate)` pair so clips can be processed without
/// re-planning.
pub struct FeatureExtractor {
    cfg: FrameConfig,
    sample_rate: u32,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: crate::matrix::RealMatrix,
    pitch: PitchConfig,
}

impl FeatureExtractor {
    pub fn new(cfg: FrameConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate(sample_rate)?;
        let window = hamming_window(cfg.frame_len_samples(sample_rate));
        let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_size);
        let filterbank = mel_filterbank(&cfg, sample_rate)?;
        Ok(Self {
            cfg,
            sample_rate,
            window,
            fft,
            filterbank,
            pitch: PitchConfig::default(),
        })
    }

    pub fn config(&self) -> &FrameConfig {
        &self.cfg
    }

    fn check_rate(&self, clip: &AudioClip) -> Result<()> {
        if clip.sample_rate != self.sample_rate {
            return Err(Error::InvalidConfig(format!(
                "extractor built for {} Hz, clip is {} Hz",
                self.sample_rate, clip.sample_rate
            )));
        }
        Ok(())
    }

    /// Per-frame log Mel energies as a `num_mel × s` matrix.
    pub fn log_mel(&self, clip: &AudioClip) -> Result<FeatureMatrix> {
        self.check_rate(clip)?;
        let frames = frame_signal(clip, &self.cfg)?;
        let mut buf = vec![Complex::new(0.0, 0.0); self.cfg.fft_size];
        let mut columns = Vec::with_capacity(frames.len());
        let mut windowed = vec![0.0; self.window.len()];
        for frame in &frames {
            for ((w, x), win) in windowed.iter_mut().zip(frame).zip(&self.window) {
                *w = x * win;
            }
            let spec = power_spectrum_with(&*self.fft, &windowed, &mut buf);
            columns.push(log_mel(&spec, &self.filterbank)?);
        }
        FeatureMatrix::from_columns(FeatureKind::LogMel, &columns, self.cfg.num_mel, self.cfg.frame_shift)
    }

    pub fn mfcc(&self, clip: &AudioClip) -> Result<FeatureMatrix> {
        let logmel = self.log_mel(clip)?;
        let s = logmel.frames();
        let mut columns = Vec::with_capacity(s);
        let mut col = vec![0.0; logmel.dims()];
        for t in 0..s {
            for (i, c) in col.iter_mut().enumerate() {
                *c = logmel.data.get(i, t);
            }
            columns.push(mfcc(&col, self.cfg.num_mfcc, self.cfg.mfcc_include_c0)?);
        }
        FeatureMatrix::from_columns(FeatureKind::Mfcc, &columns, self.cfg.num_mfcc, self.cfg.frame_shift)
    }

    pub fn prosody(&self, clip: &AudioClip) -> Result<FeatureMatrix> {
        self.check_rate(clip)?;
        pitch::prosody_with(clip, &self.cfg, &self.pitch)
    }

    /// Extracts `kind`; `Fused` stacks log Mel over prosody rows.
    pub fn extract(&self, kind: FeatureKind, clip: &AudioClip) -> Result<FeatureMatrix> {
        match kind {
            FeatureKind::LogMel => self.log_mel(clip),
            FeatureKind::Mfcc => self.mfcc(clip),
            FeatureKind::Prosody => self.prosody(clip),
            FeatureKind::Fused => {
                let a = self.log_mel(clip)?;
                let b = self.prosody(clip)?;
                crate::data::fuse_features(&a, &b)
            }
        }
    }
}
