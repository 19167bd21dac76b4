use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Lower bound on per-dimension standard deviation.
pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerStats {
    pub speaker_id: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-dimension mean and population standard deviation over every frame of
/// every matrix.
pub fn compute_speaker_stats(speaker_id: &str, matrices: &[&FeatureMatrix]) -> Result<SpeakerStats> {
    let d = matrices.first().map_or(0, |m| m.dims());
    let total: usize = matrices.iter().map(|m| m.frames()).sum();
    if total < 2 {
        return Err(Error::InsufficientFrames(total));
    }
    for m in matrices {
        if m.dims() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dims(),
            });
        }
    }
    let n = total as f64;
    let mut mean = vec![0.0; d];
    for m in matrices {
        for (i, mu) in mean.iter_mut().enumerate() {
            *mu += m.data.row(i).iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; d];
    for m in matrices {
        for (i, acc) in var.iter_mut().enumerate() {
            *acc += m.data.row(i).iter().map(|v| (v - mean[i]).powi(2)).sum::<f64>();
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    Ok(SpeakerStats {
        speaker_id: speaker_id.to_string(),
        mean,
        std,
    })
}

pub fn normalize(matrix: &FeatureMatrix, stats: &SpeakerStats) -> Result<FeatureMatrix> {
    map_rows(matrix, stats, |v, mu, sd| (v - mu) / sd)
}

pub fn denormalize(matrix: &FeatureMatrix, stats: &SpeakerStats) -> Result<FeatureMatrix> {
    map_rows(matrix, stats, |v, mu, sd| v * sd + mu)
}

fn map_rows(matrix: &FeatureMatrix, stats: &SpeakerStats, f: impl Fn(f64, f64, f64) -> f64) -> Result<FeatureMatrix> {
    if stats.mean.len() != matrix.dims() || stats.std.len() != matrix.dims() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dims(),
            found: stats.mean.len(),
        });
    }
    let mut out = matrix.clone();
    for i in 0..matrix.dims() {
        let (mu, sd) = (stats.mean[i], stats.std[i]);
        out.data.row_mut(i).iter_mut().for_each(|v| *v = f(*v, mu, sd));
    }
    Ok(out)
}
