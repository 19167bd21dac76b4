use rand::Rng;

/// Inverted dropout. In training each unit is zeroed with probability
/// `drop_prob` and survivors are scaled by `1/(1-drop_prob)`; the returned mask
/// holds the per-unit multiplier. Inference (or `drop_prob == 0`) is the
/// identity and returns no mask.
pub fn dropout_forward<R: Rng + ?Sized>(
    x: &[f64],
    drop_prob: f64,
    rng: &mut R,
    training: bool,
) -> (Vec<f64>, Option<Vec<f64>>) {
    if !training || drop_prob <= 0.0 {
        return (x.to_vec(), None);
    }
    let keep = 1.0 - drop_prob;
    let scale = if keep > 0.0 { 1.0 / keep } else { 0.0 };
    let mask: Vec<f64> = x
        .iter()
        .map(|_| if rng.gen::<f64>() < drop_prob { 0.0 } else { scale })
        .collect();
    let out = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
    (out, Some(mask))
}

pub fn dropout_backward(mask: Option<&[f64]>, upstream: &[f64]) -> Vec<f64> {
    match mask {
        Some(m) => upstream.iter().zip(m).map(|(g, s)| g * s).collect(),
        None => upstream.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = [1.0, -2.0, 3.0];
        assert_eq!(dropout_forward(&x, 0.0, &mut rng, true), (x.to_vec(), None));
        assert_eq!(dropout_forward(&x, 0.8, &mut rng, false), (x.to_vec(), None));
    }

    #[test]
    fn inverted_scaling_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [0.2, 0.8] {
            let trials = 100_000;
            let mut total = 0.0;
            for _ in 0..trials {
                total += dropout_forward(&[1.5], p, &mut rng, true).0[0];
            }
            let mean = total / trials as f64;
            assert!((mean - 1.5).abs() / 1.5 < 0.02, "p={p}: {mean}");
        }
    }

    #[test]
    fn backward_applies_mask() {
        assert_eq!(dropout_backward(Some(&[0.0, 2.0]), &[3.0, 3.0]), vec![0.0, 6.0]);
        assert_eq!(dropout_backward(None, &[3.0]), vec![3.0]);
    }
}
