use std::collections::BTreeMap;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::{AdamConfig, AdamState};
use super::folds::{make_loso_folds, FoldSpec};
use super::metrics::Confusion;
use crate::data::{prepare_corpus, Corpus, PrepareOptions, PreparedCorpus, Subset};
use crate::dsp::{FeatureKind, FrameConfig};
use crate::error::{Error, Result};
use crate::model::{
    fingerprint_json, init_model, loss_and_backward, predict, ModelConfig, ModelParams, Variant, ViewWeights,
    NUM_EMOTIONS,
};
use crate::nn::Activation;
use crate::seed::derive_seed;

/// Environment variable capping the number of concurrent (fold, seed) jobs.
pub const THREADS_ENV: &str = "ACNN_THREADS";

pub const DEFAULT_LENGTHS: [f64; 8] = [7.5, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Per-run seeds, derived from `master_seed` unless set explicitly.
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub max_len_seconds: f64,
    pub adam: AdamConfig,
    pub view_weights: ViewWeights,
}

impl TrainConfig {
    pub fn new(kind: FeatureKind, master_seed: u64, num_seeds: usize) -> Self {
        Self {
            batch_size: default_batch_size(kind),
            max_epochs: 50,
            patience: 8,
            seeds: seed_list(master_seed, num_seeds),
            master_seed,
            max_len_seconds: 7.5,
            adam: AdamConfig::default(),
            view_weights: ViewWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!("patience {} exceeds max_epochs {}", self.patience, self.max_epochs));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.max_len_seconds > 0.0) {
            return bad("max_len_seconds must be positive".into());
        }
        Ok(())
    }
}

/// 50 for MFCC input, 30 for everything else.
pub fn default_batch_size(kind: FeatureKind) -> usize {
    match kind {
        FeatureKind::Mfcc => 50,
        _ => 30,
    }
}

pub fn seed_list(master: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(master, i)).collect()
}

/// Architecture settings that do not depend on the data shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub kernel_widths: Vec<usize>,
    pub kernels_per_width: usize,
    pub pool_size: usize,
    pub pool_stride: usize,
    pub conv_activation: Activation,
    pub drop_prob: f64,
}

impl Default for ModelHyper {
    fn default() -> Self {
        let m = ModelConfig::new(1, 1, Variant::AcnnSv);
        Self {
            kernel_widths: m.kernel_widths,
            kernels_per_width: m.kernels_per_width,
            pool_size: m.pool_size,
            pool_stride: m.pool_stride,
            conv_activation: m.conv_activation,
            drop_prob: m.drop_prob,
        }
    }
}

impl ModelHyper {
    pub fn model_config(&self, input_dim: usize, input_len: usize, variant: Variant) -> ModelConfig {
        ModelConfig {
            kernel_widths: self.kernel_widths.clone(),
            kernels_per_width: self.kernels_per_width,
            pool_size: self.pool_size,
            pool_stride: self.pool_stride,
            conv_activation: self.conv_activation,
            drop_prob: self.drop_prob,
            ..ModelConfig::new(input_dim, input_len, variant)
        }
    }
}

/// Everything that determines a cross-validation run, besides the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subset: Subset,
    pub features: FeatureKind,
    pub variant: Variant,
    pub model: ModelHyper,
    pub train: TrainConfig,
    pub frame: FrameConfig,
    /// Waveforms are cut to this many seconds before feature extraction.
    pub truncate_seconds: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(subset: Subset, features: FeatureKind, variant: Variant, master_seed: u64, num_seeds: usize) -> Self {
        Self {
            subset,
            features,
            variant,
            model: ModelHyper::default(),
            train: TrainConfig::new(features, master_seed, num_seeds),
            frame: FrameConfig::default(),
            truncate_seconds: None,
        }
    }

    pub fn prepare_options(&self) -> PrepareOptions {
        PrepareOptions {
            kind: self.features,
            frame: self.frame.clone(),
            max_len_seconds: self.train.max_len_seconds,
            truncate_seconds: self.truncate_seconds,
        }
    }

    /// Hash of every setting except the seeds.
    pub fn fingerprint(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(train) = v.get_mut("train").and_then(|t| t.as_object_mut()) {
            train.remove("seeds");
            train.remove("master_seed");
        }
        fingerprint_json(&v)
    }
}

/// Outcome of one (fold, seed) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub fold: usize,
    pub test_session: String,
    pub seed: u64,
    pub features: String,
    pub variant: Variant,
    pub wa: f64,
    pub confusion: Confusion,
    pub epochs: usize,
    pub best_epoch: usize,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_wa: f64,
}

/// A finished fold: the result, the restored best-dev parameters and the
/// per-epoch trace.
#[derive(Debug, Clone)]
pub struct TrainedFold {
    pub result: RunResult,
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
}

/// Confusion of the model's emotion predictions on `indices`.
pub fn evaluate(params: &ModelParams, data: &PreparedCorpus, indices: &[usize]) -> Result<Confusion> {
    let mut c = Confusion::new(params.config.num_emotions);
    for &i in indices {
        let u = &data.utterances[i];
        let p = predict(params, &u.input)?;
        c.add(u.labels.emotion, p.emotion);
    }
    Ok(c)
}

/// One optimizer step on the mean loss over `batch`. Returns that mean loss.
pub fn train_batch(
    params: &mut ModelParams,
    adam: &mut AdamState,
    data: &PreparedCorpus,
    batch: &[usize],
    weights: ViewWeights,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    params.zero_grad();
    let mut total = 0.0;
    for &i in batch {
        let u = &data.utterances[i];
        total += loss_and_backward(params, &u.input, u.labels, weights, rng)?;
    }
    let scale = 1.0 / batch.len() as f64;
    let mut tensors = params.tensors_mut();
    for t in tensors.iter_mut() {
        t.grad.as_mut_slice().iter_mut().for_each(|g| *g *= scale);
    }
    adam.step(&mut tensors)?;
    Ok(total * scale)
}

/// Trains on `fold.train` with dev-WA early stopping, restores the best-dev
/// parameters and scores `fold.test`.
pub fn train_fold(
    fold: &FoldSpec,
    data: &PreparedCorpus,
    model: &ModelConfig,
    train: &TrainConfig,
    seed: u64,
) -> Result<TrainedFold> {
    train.validate()?;
    model.validate()?;
    if fold.train.is_empty() {
        return Err(Error::EmptySubset(format!("fold {} has no training utterances", fold.fold)));
    }
    let job_seed = derive_seed(seed, fold.fold as u64);
    let mut params = init_model(model, derive_seed(job_seed, 1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(job_seed, 2));
    let mut adam = AdamState::for_params(train.adam, &params.tensors_mut());

    // with no dev set the training set stands in for early stopping
    let dev: &[usize] = if fold.dev.is_empty() { &fold.train } else { &fold.dev };
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();
    let mut order = fold.train.clone();
    for epoch in 1..=train.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(train.batch_size) {
            loss_sum += train_batch(&mut params, &mut adam, data, batch, train.view_weights, &mut rng)? * batch.len() as f64;
        }
        let dev_wa = evaluate(&params, data, dev)?.weighted_accuracy();
        let train_loss = loss_sum / order.len() as f64;
        debug!("fold {} seed {seed}: epoch {epoch} loss {train_loss:.4} dev {dev_wa:.4}", fold.fold);
        history.push(EpochStats {
            epoch,
            train_loss,
            dev_wa,
        });
        match &best {
            Some((b, _, _)) if dev_wa <= *b => {
                since_best += 1;
                if since_best > train.patience {
                    break;
                }
            }
            _ => {
                best = Some((dev_wa, epoch, params.clone()));
                since_best = 0;
            }
        }
    }
    let epochs = history.len();
    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    let confusion = evaluate(&params, data, &fold.test)?;
    Ok(TrainedFold {
        result: RunResult {
            fold: fold.fold,
            test_session: fold.test_session.clone(),
            seed,
            features: data.kind.name().to_string(),
            variant: model.variant(),
            wa: confusion.weighted_accuracy(),
            confusion,
            epochs,
            best_epoch,
            fingerprint: String::new(),
        },
        params,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldInfo {
    pub fold: usize,
    pub test_session: String,
    pub test_speakers: Vec<String>,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// JSON summary of a cross-validation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: String,
    pub subset: Subset,
    pub features: String,
    pub variant: Variant,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    /// Cross-fold WA of each seed: correct over total, pooled over folds.
    pub per_seed_wa: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Emotion confusion pooled over every fold and seed.
    pub pooled_confusion: Confusion,
    pub folds: Vec<FoldInfo>,
    pub fingerprint: String,
    pub corpus_hash: String,
    pub config: ExperimentConfig,
}

pub const SUMMARY_SCHEMA: &str = "acnn-summary/1";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Sorted by (fold, seed index).
    pub runs: Vec<RunResult>,
    pub summary: ExperimentSummary,
}

/// SHA-256 over utterance ids, labels and prepared inputs.
pub fn corpus_hash(data: &PreparedCorpus) -> String {
    let mut h = Sha256::new();
    h.update((data.dims as u64).to_le_bytes());
    h.update((data.frames as u64).to_le_bytes());
    for u in &data.utterances {
        h.update(u.utt_id.as_bytes());
        h.update([0, u.labels.emotion as u8, u.labels.activation as u8, u.labels.valence as u8]);
        for v in u.input.as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Job parallelism from `ACNN_THREADS`; 1 when unset or unparsable.
pub fn job_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Selects the subset, prepares features and runs every (fold, seed) job.
pub fn run_experiment(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let subset = corpus.subset(cfg.subset)?;
    let data = prepare_corpus(&subset, &cfg.prepare_options())?;
    run_prepared(&data, cfg)
}

/// Cross-validation on already prepared inputs.
pub fn run_prepared(data: &PreparedCorpus, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.train.validate()?;
    if data.kind != cfg.features {
        return Err(Error::InvalidConfig(format!(
            "prepared {} features, experiment asks for {}",
            data.kind, cfg.features
        )));
    }
    let model = cfg.model.model_config(data.dims, data.frames, cfg.variant);
    model.validate()?;
    let folds = make_loso_folds(&data.utterances, cfg.train.master_seed)?;
    let fingerprint = cfg.fingerprint();

    let jobs: Vec<(usize, usize)> = (0..folds.len())
        .flat_map(|f| (0..cfg.train.seeds.len()).map(move |s| (f, s)))
        .collect();
    let run_job = |&(f, s): &(usize, usize)| -> Result<RunResult> {
        let seed = cfg.train.seeds[s];
        let mut r = train_fold(&folds[f], data, &model, &cfg.train, seed)?.result;
        info!(
            "{} {} fold {} seed {}: WA {:.4} after {} epochs",
            cfg.variant, cfg.features, r.fold, seed, r.wa, r.epochs
        );
        r.fingerprint = fingerprint.clone();
        Ok(r)
    };
    let threads = job_threads();
    let results: Vec<Result<RunResult>> = if threads <= 1 {
        jobs.iter().map(run_job).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run_job).collect())
    };
    // results arrive in job order, which is already (fold, seed index)
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize(cfg, &folds, &runs, fingerprint, corpus_hash(data));
    Ok(ExperimentReport { runs, summary })
}

fn summarize(
    cfg: &ExperimentConfig,
    folds: &[FoldSpec],
    runs: &[RunResult],
    fingerprint: String,
    corpus_hash: String,
) -> ExperimentSummary {
    let mut pooled = Confusion::new(NUM_EMOTIONS);
    let mut per_seed: BTreeMap<usize, Confusion> = BTreeMap::new();
    for r in runs {
        pooled.merge(&r.confusion);
        let s = cfg.train.seeds.iter().position(|&x| x == r.seed).unwrap_or(0);
        per_seed.entry(s).or_insert_with(|| Confusion::new(NUM_EMOTIONS)).merge(&r.confusion);
    }
    let per_seed_wa: Vec<f64> = per_seed.values().map(Confusion::weighted_accuracy).collect();
    let (mean, min, max) = mean_min_max(&per_seed_wa);
    ExperimentSummary {
        schema: SUMMARY_SCHEMA.into(),
        subset: cfg.subset,
        features: cfg.features.name().into(),
        variant: cfg.variant,
        master_seed: cfg.train.master_seed,
        seeds: cfg.train.seeds.clone(),
        per_seed_wa,
        mean,
        min,
        max,
        pooled_confusion: pooled,
        folds: folds
            .iter()
            .map(|f| FoldInfo {
                fold: f.fold,
                test_session: f.test_session.clone(),
                test_speakers: f.test_speakers.clone(),
                train: f.train.len(),
                dev: f.dev.len(),
                test: f.test.len(),
            })
            .collect(),
        fingerprint,
        corpus_hash,
        config: cfg.clone(),
    }
}

pub fn mean_min_max(values: &[f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub features: String,
    pub length: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub fingerprint: String,
}

/// Runs the full experiment once per (feature kind, length), cutting every
/// waveform to the length before extraction. Lengths at or above the input
/// cap are not truncated. Rows are sorted by feature kind, then by length
/// descending.
pub fn length_sweep(
    corpus: &Corpus,
    base: &ExperimentConfig,
    kinds: &[FeatureKind],
    lengths: &[f64],
) -> Result<Vec<(SweepRow, ExperimentReport)>> {
    if lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidRange(format!("sweep lengths must be positive: {lengths:?}")));
    }
    let subset = corpus.subset(base.subset)?;
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let mut lengths = lengths.to_vec();
    lengths.sort_by(|a, b| b.total_cmp(a));
    lengths.dedup();

    let mut rows = Vec::new();
    for kind in kinds {
        for &length in &lengths {
            let mut cfg = base.clone();
            cfg.features = kind;
            if base.features != kind {
                cfg.train.batch_size = default_batch_size(kind);
            }
            cfg.truncate_seconds = (length < cfg.train.max_len_seconds).then_some(length);
            let data = prepare_corpus(&subset, &cfg.prepare_options())?;
            let report = run_prepared(&data, &cfg)?;
            let s = &report.summary;
            rows.push((
                SweepRow {
                    features: kind.name().into(),
                    length,
                    mean: s.mean,
                    min: s.min,
                    max: s.max,
                    fingerprint: s.fingerprint.clone(),
                },
                report,
            ));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_sizes_follow_features() {
        assert_eq!(default_batch_size(FeatureKind::LogMel), 30);
        assert_eq!(default_batch_size(FeatureKind::Mfcc), 50);
        assert_eq!(default_batch_size(FeatureKind::Prosody), 30);
        let t = TrainConfig::new(FeatureKind::LogMel, 7, 6);
        assert_eq!((t.max_epochs, t.patience, t.seeds.len()), (50, 8, 6));
        assert_eq!(t.max_len_seconds, 7.5);
    }

    #[test]
    fn train_config_validation() {
        let mut t = TrainConfig::new(FeatureKind::LogMel, 7, 1);
        t.patience = 60;
        assert!(t.validate().is_err());
        t.patience = 0;
        t.batch_size = 0;
        assert!(t.validate().is_err());
    }

    #[test]
    fn fingerprint_ignores_seeds() {
        let a = ExperimentConfig::new(Subset::All, FeatureKind::LogMel, Variant::AcnnMv, 1, 2);
        let b = ExperimentConfig::new(Subset::All, FeatureKind::LogMel, Variant::AcnnMv, 9, 6);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = ExperimentConfig::new(Subset::All, FeatureKind::LogMel, Variant::CnnMv, 1, 2);
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn summary_stats() {
        assert_eq!(mean_min_max(&[0.5]), (0.5, 0.5, 0.5));
        assert_eq!(mean_min_max(&[0.2, 0.4]), (0.30000000000000004, 0.2, 0.4));
    }
}
