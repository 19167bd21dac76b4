//! Autocorrelation pitch tracking and the seven prosody rows.

use super::{frame_signal, AudioClip, FeatureKind, FeatureMatrix, FrameConfig, FLOOR_EPS};
use crate::error::Result;

/// Row order of the prosody matrix.
pub const PROSODY_ROWS: [&str; 7] = [
    "loudness",
    "f0_envelope",
    "voicing_prob",
    "f0",
    "jitter_local",
    "jitter_ddp",
    "shimmer_local",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PitchConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f_min: 55.0,
            f_max: 400.0,
            voicing_threshold: 0.45,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Estimate {
    /// Hz, 0 when unvoiced.
    pub f0: f64,
    /// Peak normalized autocorrelation clamped to `[0, 1]`.
    pub voicing_prob: f64,
}

impl F0Estimate {
    const UNVOICED: F0Estimate = F0Estimate { f0: 0.0, voicing_prob: 0.0 };
}

/// Estimates F0 with the default 55-400 Hz search range and 0.45 threshold.
pub fn estimate_f0(frame: &[f64], sample_rate: u32) -> F0Estimate {
    estimate_f0_with(frame, sample_rate, &PitchConfig::default())
}

/// Normalized autocorrelation pitch estimate.
///
/// For each lag the mean-removed frame is correlated with its shifted copy and
/// divided by the energies of the two overlapping parts, so a periodic signal
/// scores close to 1 at its period. The longest lag is clamped so the overlap
/// keeps at least a third of the frame. Among peaks within 5% of the best score
/// the shortest lag wins, which suppresses octave-down errors.
pub fn estimate_f0_with(frame: &[f64], sample_rate: u32, cfg: &PitchConfig) -> F0Estimate {
    let n = frame.len();
    let sr = f64::from(sample_rate);
    let min_lag = (sr / cfg.f_max).ceil().max(1.0) as usize;
    let max_lag = ((sr / cfg.f_min).floor() as usize).min(n.saturating_sub(n / 3 + 1));
    if n < 4 || min_lag + 2 > max_lag {
        return F0Estimate::UNVOICED;
    }
    let mean = frame.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
    let total: f64 = x.iter().map(|v| v * v).sum();
    if total <= 1e-20 {
        return F0Estimate::UNVOICED;
    }

    // prefix sums of x² give both overlap energies in O(1)
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for v in &x {
        cum.push(cum.last().unwrap() + v * v);
    }
    let score = |lag: usize| -> f64 {
        let head = cum[n - lag];
        let tail = cum[n] - cum[lag];
        let denom = (head * tail).sqrt();
        if denom <= 1e-20 {
            return 0.0;
        }
        let dot: f64 = x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
        dot / denom
    };
    // one extra lag on each side for the parabola
    let lo = min_lag - 1;
    let r: Vec<f64> = (lo..=max_lag + 1).map(|l| if l == 0 { 1.0 } else { score(l) }).collect();
    let at = |lag: usize| r[lag - lo];

    let mut best = min_lag;
    for lag in min_lag..=max_lag {
        if at(lag) > at(best) {
            best = lag;
        }
    }
    let best_score = at(best);
    if best_score <= 0.0 {
        return F0Estimate::UNVOICED;
    }
    let mut chosen = best;
    for lag in min_lag..best {
        let is_peak = at(lag) >= at(lag - 1) && at(lag) >= at(lag + 1);
        if is_peak && at(lag) >= 0.95 * best_score {
            chosen = lag;
            break;
        }
    }

    let (a, b, c) = (at(chosen - 1), at(chosen), at(chosen + 1));
    let curve = a - 2.0 * b + c;
    let offset = if curve < 0.0 {
        (0.5 * (a - c) / curve).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let voicing_prob = b.clamp(0.0, 1.0);
    let f0 = if voicing_prob >= cfg.voicing_threshold {
        sr / (chosen as f64 + offset)
    } else {
        0.0
    };
    F0Estimate { f0, voicing_prob }
}

/// Seven prosody rows (see [`PROSODY_ROWS`]) with the default pitch settings.
pub fn prosody_features(clip: &AudioClip, cfg: &FrameConfig) -> Result<FeatureMatrix> {
    prosody_with(clip, cfg, &PitchConfig::default())
}

pub(crate) fn prosody_with(clip: &AudioClip, cfg: &FrameConfig, pitch: &PitchConfig) -> Result<FeatureMatrix> {
    let frames = frame_signal(clip, cfg)?;
    let s = frames.len();
    let mut loudness = Vec::with_capacity(s);
    let mut f0 = Vec::with_capacity(s);
    let mut voicing = Vec::with_capacity(s);
    let mut peak = Vec::with_capacity(s);
    for frame in &frames {
        let ms = frame.iter().map(|v| v * v).sum::<f64>() / frame.len() as f64;
        loudness.push((ms + FLOOR_EPS).ln());
        let est = estimate_f0_with(frame, clip.sample_rate, pitch);
        f0.push(est.f0);
        voicing.push(est.voicing_prob);
        peak.push(frame.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    let voiced: Vec<usize> = (0..s).filter(|&i| f0[i] > 0.0).collect();
    let periods: Vec<f64> = voiced.iter().map(|&i| 1.0 / f0[i]).collect();
    let amps: Vec<f64> = voiced.iter().map(|&i| peak[i]).collect();
    let jitter_local = local_perturbation(&periods);
    let jitter_ddp = differential_perturbation(&periods);
    let shimmer = local_perturbation(&amps);

    let envelope = interpolate_gaps(&f0);
    let rows = [
        loudness,
        envelope,
        voicing,
        f0,
        vec![jitter_local; s],
        vec![jitter_ddp; s],
        vec![shimmer; s],
    ];
    let mut data = crate::matrix::RealMatrix::zeros(7, s);
    for (r, row) in rows.iter().enumerate() {
        data.row_mut(r).copy_from_slice(row);
    }
    FeatureMatrix::new(FeatureKind::Prosody, data, cfg.frame_shift)
}

/// mean |x_i - x_{i-1}| / mean x
fn local_perturbation(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    if mean <= 0.0 {
        return 0.0;
    }
    let diff = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (x.len() - 1) as f64;
    diff / mean
}

/// mean |(x_i - x_{i-1}) - (x_{i-1} - x_{i-2})| / mean x
fn differential_perturbation(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    if mean <= 0.0 {
        return 0.0;
    }
    let diff = x
        .windows(3)
        .map(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs())
        .sum::<f64>()
        / (x.len() - 2) as f64;
    diff / mean
}

/// Fills zero (unvoiced) stretches by linear interpolation between voiced
/// neighbours, holding the first/last voiced value at the edges.
fn interpolate_gaps(f0: &[f64]) -> Vec<f64> {
    let voiced: Vec<usize> = (0..f0.len()).filter(|&i| f0[i] > 0.0).collect();
    let (Some(&first), Some(&last)) = (voiced.first(), voiced.last()) else {
        return vec![0.0; f0.len()];
    };
    let mut out = f0.to_vec();
    out[..first].iter_mut().for_each(|v| *v = f0[first]);
    out[last + 1..].iter_mut().for_each(|v| *v = f0[last]);
    for w in voiced.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            out[i] = f0[a] + t * (f0[b] - f0[a]);
        }
    }
    out
}
