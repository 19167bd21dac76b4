#![allow(dead_code)]

pub mod checks;
pub mod reference;

use std::path::Path;

use acnn::data::{synth_generate, Corpus, SynthConfig};
use acnn::model::ModelParams;
use acnn::RealMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RealMatrix {
    let v = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    RealMatrix::from_vec(rows, cols, v).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A small synthetic corpus: `sessions` sessions of two speakers each.
pub fn small_synth(dir: &Path, per_class: usize, sessions: usize, seed: u64) -> (SynthConfig, Corpus) {
    let cfg = SynthConfig {
        utterances_per_class: per_class,
        sessions,
        min_duration: 1.0,
        max_duration: 1.6,
        seed,
        ..SynthConfig::default()
    };
    synth_generate(&cfg, dir).unwrap();
    let corpus = Corpus::load(&dir.join("manifest.csv")).unwrap();
    (cfg, corpus)
}

pub fn param_values(p: &ModelParams) -> Vec<Vec<f64>> {
    p.named_tensors().iter().map(|(_, t)| t.value.as_slice().to_vec()).collect()
}

pub fn param_grads(p: &ModelParams) -> Vec<Vec<f64>> {
    p.named_tensors().iter().map(|(_, t)| t.grad.as_slice().to_vec()).collect()
}

pub fn param_names(p: &ModelParams) -> Vec<String> {
    p.named_tensors().into_iter().map(|(n, _)| n).collect()
}

pub fn set_param_values(p: &mut ModelParams, blocks: &[Vec<f64>]) {
    for (t, b) in p.tensors_mut().into_iter().zip(blocks) {
        t.value.as_mut_slice().copy_from_slice(b);
    }
}
