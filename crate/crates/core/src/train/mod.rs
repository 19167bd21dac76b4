//! Optimization, leave-one-session-out cross-validation, the multi-seed
//! experiment runner and the signal-length sweep.

mod adam;
mod folds;
mod metrics;
pub mod results;
mod runner;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use folds::{make_loso_folds, FoldMember, FoldSpec, DEV_FRACTION};
pub use metrics::Confusion;
pub use runner::{
    corpus_hash, default_batch_size, evaluate, job_threads, length_sweep, mean_min_max, run_experiment, run_prepared,
    seed_list, train_batch, train_fold, EpochStats, ExperimentConfig, ExperimentReport, ExperimentSummary, FoldInfo,
    ModelHyper, RunResult, SweepRow, TrainConfig, TrainedFold, DEFAULT_LENGTHS, SUMMARY_SCHEMA, THREADS_ENV,
};
