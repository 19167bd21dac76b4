use crate::dsp::{FeatureKind, FeatureMatrix, FrameConfig};
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Frames produced by a clip of exactly `seconds` (748 for 7.5 s at the
/// default 25 ms / 10 ms framing).
pub fn target_frames(seconds: f64, cfg: &FrameConfig, sample_rate: u32) -> usize {
    let n = (seconds * f64::from(sample_rate)).round() as usize;
    cfg.frame_count(n, sample_rate)
}

/// Truncates to the first `frames` columns or right-pads with zero columns.
pub fn cut_pad(matrix: &FeatureMatrix, frames: usize) -> FeatureMatrix {
    let d = matrix.dims();
    let keep = matrix.frames().min(frames);
    let mut data = RealMatrix::zeros(d, frames);
    for i in 0..d {
        data.row_mut(i)[..keep].copy_from_slice(&matrix.data.row(i)[..keep]);
    }
    FeatureMatrix::unchecked(matrix.kind, data, matrix.frame_shift)
}

/// Early fusion: rows of `a` followed by rows of `b`, frame-aligned.
pub fn fuse_features(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if a.frames() != b.frames() {
        return Err(Error::FrameCountMismatch(a.frames(), b.frames()));
    }
    if a.frame_shift != b.frame_shift {
        return Err(Error::ShapeMismatch(format!(
            "frame shift {} vs {}",
            a.frame_shift, b.frame_shift
        )));
    }
    let mut values = Vec::with_capacity(a.data.len() + b.data.len());
    values.extend_from_slice(a.data.as_slice());
    values.extend_from_slice(b.data.as_slice());
    let data = RealMatrix::from_vec(a.dims() + b.dims(), a.frames(), values)?;
    Ok(FeatureMatrix::unchecked(FeatureKind::Fused, data, a.frame_shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(kind: FeatureKind, d: usize, s: usize) -> FeatureMatrix {
        let values = (0..d * s).map(|v| v as f64 + 1.0).collect();
        FeatureMatrix::unchecked(kind, RealMatrix::from_vec(d, s, values).unwrap(), 0.01)
    }

    #[test]
    fn default_target() {
        assert_eq!(target_frames(7.5, &FrameConfig::default(), 16_000), 748);
        assert_eq!(target_frames(1.0, &FrameConfig::default(), 16_000), 98);
        assert_eq!(target_frames(3.0, &FrameConfig::default(), 16_000), 298);
    }

    #[test]
    fn fixed_point_pad_and_prefix() {
        let m = ramp(FeatureKind::LogMel, 2, 748);
        assert_eq!(cut_pad(&m, 748), m);

        let short = ramp(FeatureKind::LogMel, 2, 298);
        let padded = cut_pad(&short, 748);
        assert_eq!(padded.frames(), 748);
        for i in 0..2 {
            assert_eq!(&padded.data.row(i)[..298], short.data.row(i));
            assert!(padded.data.row(i)[298..].iter().all(|&v| v == 0.0));
        }

        let long = ramp(FeatureKind::LogMel, 2, 998);
        let cut = cut_pad(&long, 748);
        for i in 0..2 {
            assert_eq!(cut.data.row(i), &long.data.row(i)[..748]);
        }
    }

    #[test]
    fn fusion_layout() {
        let a = ramp(FeatureKind::LogMel, 26, 10);
        let b = ramp(FeatureKind::Prosody, 7, 10);
        let f = fuse_features(&a, &b).unwrap();
        assert_eq!(f.data.shape(), (33, 10));
        assert_eq!(f.kind, FeatureKind::Fused);
        assert_eq!(f.data.row(26), b.data.row(0));
        assert_eq!(f.data.row(0), a.data.row(0));

        let empty = FeatureMatrix::unchecked(FeatureKind::Prosody, RealMatrix::zeros(0, 10), 0.01);
        assert_eq!(fuse_features(&a, &empty).unwrap().data, a.data);

        let c = ramp(FeatureKind::Prosody, 7, 9);
        assert!(matches!(fuse_features(&a, &c), Err(Error::FrameCountMismatch(10, 9))));
    }
}
