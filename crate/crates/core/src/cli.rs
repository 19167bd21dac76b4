//! Command-line interface. Exit codes: 0 success, 1 failure (including
//! partial failure of a batch), 2 usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, warn};
use serde::Serialize;

use crate::data::{load_manifest, synth_generate, Corpus, PrepareOptions, Subset, SynthConfig};
use crate::dsp::wav::read_wav;
use crate::dsp::{compute_speaker_stats, write_feature_file, FeatureExtractor, FeatureKind, FeatureMatrix, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::model::{save_model, Variant};
use crate::report::{cmd_report, render_confusion};
use crate::train::results::{runs_csv, summary_json, sweep_csv, write_experiment};
use crate::train::{
    length_sweep, make_loso_folds, run_experiment, train_fold, ExperimentConfig, ExperimentReport,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "acnn", version, about = "Attentive CNN speech emotion recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one feature file per utterance and feature kind, plus speaker statistics.
    Extract(ExtractArgs),
    /// Generate the synthetic corpus (WAV files and manifest).
    Synth(SynthArgs),
    /// Train a single fold and save the model.
    Train(TrainArgs),
    /// Leave-one-session-out cross-validation over several seeds.
    Cv(CvArgs),
    /// Cross-validation at decreasing signal lengths.
    Sweep(SweepArgs),
    /// Merge experiment summaries into a comparison grid.
    Report(ReportArgs),
}

fn parse_kind(s: &str) -> std::result::Result<FeatureKind, String> {
    FeatureKind::parse(s).ok_or_else(|| format!("unknown feature kind '{s}' (logmel|mfcc|prosody|logmel+prosody)"))
}

fn parse_subset(s: &str) -> std::result::Result<Subset, String> {
    Subset::parse(s).ok_or_else(|| format!("unknown subset '{s}' (improvised|scripted|all)"))
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant '{s}' (cnn-sv|cnn-mv|acnn-sv|acnn-mv)"))
}

fn parse_length(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("length {x} must be positive")),
        Err(e) => Err(format!("'{s}': {e}")),
    }
}

fn parse_prob(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if (0.0..1.0).contains(&p) => Ok(p),
        Ok(p) => Err(format!("{p} outside [0, 1)")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_keep(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if p > 0.0 && p <= 1.0 => Ok(p),
        Ok(p) => Err(format!("{p} outside (0, 1]")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated feature kinds.
    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "logmel")]
    pub features: Vec<FeatureKind>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub sessions: Option<usize>,
    #[arg(long)]
    pub min_duration: Option<f64>,
    #[arg(long)]
    pub max_duration: Option<f64>,
}

/// Flags shared by every training command.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_subset, default_value = "all")]
    pub subset: Subset,
    #[arg(long, value_parser = parse_variant, default_value = "acnn-mv")]
    pub variant: Variant,
    /// Master seed; every other seed is derived from it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to 30, or 50 for MFCC input.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub kernel_widths: Option<Vec<usize>>,
    #[arg(long)]
    pub kernels: Option<usize>,
    /// Probability of dropping a hidden unit.
    #[arg(long, value_parser = parse_prob, conflicts_with = "keep_prob")]
    pub drop_prob: Option<f64>,
    /// Probability of keeping a hidden unit (1 - drop probability).
    #[arg(long, value_parser = parse_keep)]
    pub keep_prob: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_kind, default_value = "logmel")]
    pub features: FeatureKind,
    /// Index of the held-out session (sessions sorted by id).
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = parse_kind, default_value = "logmel")]
    pub features: FeatureKind,
    #[arg(long, default_value_t = 6)]
    pub seeds: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated feature kinds.
    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "logmel")]
    pub features: Vec<FeatureKind>,
    #[arg(long, value_parser = parse_length, value_delimiter = ',', default_value = "7.5,7,6,5,4,3,2,1")]
    pub lengths: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    pub seeds: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary JSON files or experiment output directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ModelArgs {
    fn experiment(&self, features: FeatureKind, seeds: usize) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.subset, features, self.variant, self.seed, seeds);
        if let Some(b) = self.batch_size {
            cfg.train.batch_size = b;
        }
        if let Some(w) = &self.kernel_widths {
            cfg.model.kernel_widths = w.clone();
        }
        if let Some(k) = self.kernels {
            cfg.model.kernels_per_width = k;
        }
        if let Some(p) = self.drop_prob {
            cfg.model.drop_prob = p;
        }
        if let Some(k) = self.keep_prob {
            cfg.model.drop_prob = 1.0 - k;
        }
        if let Some(e) = self.epochs {
            cfg.train.max_epochs = e;
            cfg.train.patience = cfg.train.patience.min(e);
        }
        if let Some(p) = self.patience {
            cfg.train.patience = p;
        }
        if let Some(lr) = self.lr {
            cfg.train.adam.lr = lr;
        }
        cfg.train.validate()?;
        Ok(cfg)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn cmd_synth(a: &SynthArgs) -> Result<u8> {
    let mut cfg = SynthConfig {
        seed: a.seed,
        ..SynthConfig::default()
    };
    if let Some(n) = a.per_class {
        cfg.utterances_per_class = n;
    }
    if let Some(n) = a.sessions {
        cfg.sessions = n;
    }
    if let Some(d) = a.min_duration {
        cfg.min_duration = d;
    }
    if let Some(d) = a.max_duration {
        cfg.max_duration = d;
    }
    let records = synth_generate(&cfg, &a.out)?;
    write_json(&a.out.join("synth_config.json"), &cfg)?;
    println!(
        "wrote {} utterances ({} speakers, {} sessions) to {}",
        records.len(),
        cfg.speakers(),
        cfg.sessions,
        a.out.display()
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ExtractStats<'a> {
    master_config: &'a crate::dsp::FrameConfig,
    kinds: Vec<&'static str>,
    files: usize,
    errors: Vec<String>,
    speaker_stats: BTreeMap<&'static str, Vec<crate::dsp::SpeakerStats>>,
}

fn cmd_extract(a: &ExtractArgs) -> Result<u8> {
    let manifest = load_manifest(&a.manifest)?;
    let kinds = {
        let mut k = a.features.clone();
        k.sort();
        k.dedup();
        k
    };
    let extractor = FeatureExtractor::new(PrepareOptions::new(FeatureKind::LogMel).frame, SAMPLE_RATE)?;
    let mut errors = Vec::new();
    let mut files = 0;
    let mut per_kind: BTreeMap<FeatureKind, BTreeMap<String, Vec<FeatureMatrix>>> = BTreeMap::new();
    for rec in &manifest.records {
        let clip = match read_wav(&rec.wav_path) {
            Ok(c) => c,
            Err(e) => {
                errors.push(format!("{}: {e}", rec.utt_id));
                continue;
            }
        };
        for &kind in &kinds {
            let result = extractor.extract(kind, &clip).and_then(|m| {
                let path = a.out.join(kind.name()).join(format!("{}.acnf", rec.utt_id));
                write_feature_file(&path, &m)?;
                Ok(m)
            });
            match result {
                Ok(m) => {
                    files += 1;
                    per_kind.entry(kind).or_default().entry(rec.speaker_id.clone()).or_default().push(m);
                }
                Err(e) => errors.push(format!("{} ({kind}): {e}", rec.utt_id)),
            }
        }
    }
    let mut speaker_stats = BTreeMap::new();
    for (kind, speakers) in &per_kind {
        let stats = speakers
            .iter()
            .map(|(spk, mats)| compute_speaker_stats(spk, &mats.iter().collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        speaker_stats.insert(kind.name(), stats);
    }
    write_json(
        &a.out.join("speaker_stats.json"),
        &ExtractStats {
            master_config: extractor.config(),
            kinds: kinds.iter().map(|k| k.name()).collect(),
            files,
            errors: errors.clone(),
            speaker_stats,
        },
    )?;
    for e in &errors {
        error!("{e}");
    }
    println!(
        "extracted {files} feature files from {} utterances; {} errors",
        manifest.records.len(),
        errors.len()
    );
    Ok(if errors.is_empty() { EXIT_OK } else { EXIT_FAILURE })
}

fn write_confusion(dir: &Path, counts: &[Vec<u64>]) -> Result<()> {
    let (text, csv) = render_confusion(counts)?;
    write_atomic(&dir.join("confusion.txt"), text.as_bytes())?;
    write_atomic(&dir.join("confusion.csv"), csv.as_bytes())
}

fn cmd_train(a: &TrainArgs) -> Result<u8> {
    let cfg = a.model.experiment(a.features, 1)?;
    let corpus = Corpus::load(&a.model.manifest)?.subset(cfg.subset)?;
    let data = crate::data::prepare_corpus(&corpus, &cfg.prepare_options())?;
    let folds = make_loso_folds(&data.utterances, cfg.train.master_seed)?;
    let fold = folds
        .get(a.fold)
        .ok_or_else(|| Error::InvalidConfig(format!("fold {} out of range (0..{})", a.fold, folds.len())))?;
    let model_cfg = cfg.model.model_config(data.dims, data.frames, cfg.variant);
    let mut trained = train_fold(fold, &data, &model_cfg, &cfg.train, cfg.train.seeds[0])?;
    trained.result.fingerprint = cfg.fingerprint();
    save_model(&trained.params, &a.model.out.join("model"))?;
    write_json(&a.model.out.join("config.json"), &cfg)?;
    write_json(&a.model.out.join("result.json"), &trained.result)?;
    write_json(&a.model.out.join("history.json"), &trained.history)?;
    write_confusion(&a.model.out, &trained.result.confusion.counts)?;
    println!(
        "fold {} (test session {}): WA {:.4} after {} epochs (best epoch {}), master seed {}",
        trained.result.fold,
        trained.result.test_session,
        trained.result.wa,
        trained.result.epochs,
        trained.result.best_epoch,
        cfg.train.master_seed
    );
    Ok(EXIT_OK)
}

fn print_row(report: &ExperimentReport) {
    let s = &report.summary;
    println!(
        "{} {} {}: WA mean {:.4} min {:.4} max {:.4} over {} seeds (master seed {})",
        s.subset.name(),
        s.features,
        s.variant,
        s.mean,
        s.min,
        s.max,
        s.seeds.len(),
        s.master_seed
    );
}

fn cmd_cv(a: &CvArgs) -> Result<u8> {
    let cfg = a.model.experiment(a.features, a.seeds)?;
    let corpus = Corpus::load(&a.model.manifest)?;
    let report = run_experiment(&corpus, &cfg)?;
    write_experiment(&a.model.out, &report)?;
    write_confusion(&a.model.out, &report.summary.pooled_confusion.counts)?;
    print_row(&report);
    let (text, _) = render_confusion(&report.summary.pooled_confusion.counts)?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs) -> Result<u8> {
    let cfg = a.model.experiment(a.features[0], a.seeds)?;
    let corpus = Corpus::load(&a.model.manifest)?;
    let rows = length_sweep(&corpus, &cfg, &a.features, &a.lengths)?;
    let plain: Vec<_> = rows.iter().map(|(r, _)| r.clone()).collect();
    write_atomic(&a.model.out.join("sweep.csv"), sweep_csv(&plain, cfg.train.master_seed)?.as_bytes())?;
    for (row, report) in &rows {
        let dir = a.model.out.join(format!("{}_{}s", row.features, row.length));
        write_atomic(&dir.join("runs.csv"), runs_csv(report)?.as_bytes())?;
        write_atomic(&dir.join("summary.json"), summary_json(&report.summary)?.as_bytes())?;
        println!(
            "{} {:>4}s: WA mean {:.4} min {:.4} max {:.4}",
            row.features, row.length, row.mean, row.min, row.max
        );
    }
    Ok(EXIT_OK)
}

fn cmd_report_files(a: &ReportArgs) -> Result<u8> {
    let grid = cmd_report(&a.inputs)?;
    let md = grid.to_markdown();
    if let Some(out) = &a.out {
        write_atomic(&out.join("report.md"), md.as_bytes())?;
        write_atomic(&out.join("report.csv"), grid.to_csv()?.as_bytes())?;
    }
    print!("{md}");
    for c in grid.conflicts() {
        warn!("conflicting inputs for {c}");
    }
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report_files(a),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e @ (Error::InvalidConfig(_) | Error::InvalidRange(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
