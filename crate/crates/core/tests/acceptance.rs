//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL/SKIP line; the process exits
//! non-zero when any criterion fails.
//!
//! Criteria 5 to 7 drive the release-style `acnn` binary end to end and take
//! several minutes on a single core.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use acnn::data::{bin_dimension, Corpus, DimensionBin, Emotion, LabelMaps, Subset};
use acnn::dsp::{dct_ii_orthonormal, mfcc, power_spectrum};
use acnn::model::Variant;
use acnn::nn::{attention_forward, conv_full_height_forward, maxpool1d_forward, softmax, GradCheckReport};
use acnn::train::make_loso_folds;
use common::reference::{conv_loop, dct_direct, dft_power, pool_scan};
use common::{checks, random_matrix, random_vec, rng};
use rand::Rng;

const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
const CONV_TOL: f64 = 1e-12;
const DCT_TOL: f64 = 1e-9;
const SPECTRUM_REL_TOL: f64 = 1e-9;
const ORACLE_TRIALS: usize = 100;
const ATTN_SUM_TOL: f64 = 1e-9;
const SHIFT_TOL: f64 = 1e-12;
const E2E_MIN_WA: f64 = 0.90;
const E2E_ABLATION_MIN_WA: f64 = 0.85;
const E2E_EPOCHS: &str = "30";
const E2E_BUDGET: Duration = Duration::from_secs(15 * 60);
const SWEEP_LENGTHS: [f64; 8] = [7.5, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0];
const SWEEP_SLACK: f64 = 0.05;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 gradient suite", gradient_suite),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 attention invariants", attention_invariants),
        ("4 label mapping table", label_table),
        ("5 synthetic end-to-end", synthetic_end_to_end),
        ("6 length sweep", length_sweep),
        ("7 determinism", determinism),
        ("8 corpus protocol (conditional)", corpus_protocol),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.starts_with(o.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) if detail.starts_with("SKIP") => println!("[SKIP] {name}: {detail} ({secs:.1}s)"),
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradient_suite() -> Outcome {
    let started = Instant::now();
    let mut reports: Vec<(&str, GradCheckReport)> = Vec::new();
    let layers: [(&str, fn() -> Vec<GradCheckReport>); 7] = [
        ("conv", checks::conv),
        ("relu", checks::relu),
        ("maxpool", checks::maxpool),
        ("attention", checks::attention),
        ("linear", checks::linear),
        ("heads", checks::softmax_heads),
        ("dropout", checks::dropout),
    ];
    for (name, f) in layers {
        reports.extend(f().into_iter().map(|r| (name, r)));
    }
    for (i, v) in [Variant::AcnnMv, Variant::AcnnSv, Variant::CnnMv, Variant::CnnSv].into_iter().enumerate() {
        reports.push((v.name(), checks::model(&checks::toy_config(v), 100 + i as u64)));
    }
    reports.push(("small-pool acnn", checks::model(&checks::tiny_config(), 7)));
    let elapsed = started.elapsed();

    let mut worst = 0.0f64;
    for (name, r) in &reports {
        ensure(r.tolerance <= GRAD_TOL, || format!("{name}: tolerance {} looser than {GRAD_TOL}", r.tolerance))?;
        worst = worst.max(r.worst());
        if let Some(b) = r.failing().next() {
            return Err(format!("{name} block {} rel error {:.3e}", b.name, b.max_rel_error));
        }
    }
    ensure(elapsed < GRAD_BUDGET, || format!("took {elapsed:?}, budget {GRAD_BUDGET:?}"))?;
    Ok(format!(
        "{} reports, worst rel error {worst:.2e} < {GRAD_TOL:e}, {:.1}s < 60s",
        reports.len(),
        elapsed.as_secs_f64()
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(2024);
    let (mut conv_err, mut dct_err, mut spec_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ORACLE_TRIALS {
        let d = r.gen_range(1..6);
        let s = r.gen_range(1..30);
        let w = r.gen_range(1..=s);
        let n = r.gen_range(1..5);
        let x = random_matrix(&mut r, d, s);
        let k = random_matrix(&mut r, n, d * w);
        let b = random_vec(&mut r, n);
        let (fast, _) = conv_full_height_forward(&x, &k, &b, w).map_err(|e| e.to_string())?;
        let slow = conv_loop(&x, &k, &b, w);
        for (a, e) in fast.as_slice().iter().zip(slow.as_slice()) {
            conv_err = conv_err.max((a - e).abs());
        }

        let len = r.gen_range(2..40);
        let v: Vec<f64> = (0..len).map(|_| r.gen_range(-25.0..5.0)).collect();
        for (a, e) in dct_ii_orthonormal(&v).iter().zip(dct_direct(&v)) {
            dct_err = dct_err.max((a - e).abs());
        }
        let log_mel: Vec<f64> = (0..26).map(|_| r.gen_range(-23.0..10.0)).collect();
        let direct = dct_direct(&log_mel);
        for (a, e) in mfcc(&log_mel, 13, false).map_err(|e| e.to_string())?.iter().zip(&direct[1..14]) {
            dct_err = dct_err.max((a - e).abs());
        }

        let n_fft = [8usize, 16, 64, 256, 512][r.gen_range(0..5)];
        let frame: Vec<f64> = (0..r.gen_range(1..=n_fft)).map(|_| r.gen_range(-1.0..1.0)).collect();
        let fast = power_spectrum(&frame, n_fft).map_err(|e| e.to_string())?;
        let slow = dft_power(&frame, n_fft);
        let scale = slow.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        for (a, e) in fast.iter().zip(&slow) {
            spec_err = spec_err.max((a - e).abs() / scale);
        }

        let plen = r.gen_range(1..60);
        // coarse values so ties happen
        let m: Vec<f64> = (0..plen).map(|_| r.gen_range(-4..4) as f64).collect();
        let pool = r.gen_range(1..=plen);
        let stride = r.gen_range(1..5);
        let (vals, idx) = maxpool1d_forward(&m, pool, stride).map_err(|e| e.to_string())?;
        let (want_vals, want_idx) = pool_scan(&m, pool, stride);
        ensure(vals == want_vals && idx == want_idx, || format!("maxpool mismatch len {plen} pool {pool} stride {stride}"))?;
    }
    ensure(conv_err <= CONV_TOL, || format!("conv error {conv_err:e}"))?;
    ensure(dct_err <= DCT_TOL, || format!("dct error {dct_err:e}"))?;
    ensure(spec_err <= SPECTRUM_REL_TOL, || format!("spectrum relative error {spec_err:e}"))?;
    Ok(format!(
        "{ORACLE_TRIALS} trials each; conv {conv_err:.1e}, dct/mfcc {dct_err:.1e}, spectrum {spec_err:.1e}, maxpool exact"
    ))
}

fn attention_invariants() -> Outcome {
    let mut r = rng(77);
    let (mut sum_err, mut shift_err, mut uniform_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = r.gen_range(1..8);
        let t = r.gen_range(1..60);
        let mut x = random_matrix(&mut r, m, t);
        x.as_mut_slice().iter_mut().for_each(|v| *v *= 20.0);
        let u = random_vec(&mut r, m);
        let (_, cache) = attention_forward(&x, &u).map_err(|e| e.to_string())?;
        ensure(cache.alphas.iter().all(|&a| a >= 0.0), || "negative attention weight".into())?;
        sum_err = sum_err.max((cache.alphas.iter().sum::<f64>() - 1.0).abs());

        let logits = random_vec(&mut r, t);
        let c: f64 = r.gen_range(-50.0..50.0);
        let shifted: Vec<f64> = logits.iter().map(|l| l + c).collect();
        for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
            shift_err = shift_err.max((a - b).abs());
        }

        // identical columns give identical scores
        let col = random_vec(&mut r, m);
        let mut same = acnn::RealMatrix::zeros(m, t);
        for i in 0..m {
            for j in 0..t {
                same.set(i, j, col[i]);
            }
        }
        let (pooled, cache) = attention_forward(&same, &u).map_err(|e| e.to_string())?;
        for a in &cache.alphas {
            uniform_err = uniform_err.max((a - 1.0 / t as f64).abs());
        }
        for (p, c) in pooled.iter().zip(&col) {
            uniform_err = uniform_err.max((p - c).abs());
        }
    }
    ensure(sum_err <= ATTN_SUM_TOL, || format!("sum error {sum_err:e}"))?;
    ensure(shift_err <= SHIFT_TOL, || format!("shift error {shift_err:e}"))?;
    ensure(uniform_err <= ATTN_SUM_TOL, || format!("uniform error {uniform_err:e}"))?;
    Ok(format!(
        "200 trials; |sum-1| {sum_err:.1e}, shift {shift_err:.1e}, uniform {uniform_err:.1e}, all weights >= 0"
    ))
}

fn label_table() -> Outcome {
    let maps = LabelMaps::default();
    let table = [
        (1.0, DimensionBin::Low),
        (2.0, DimensionBin::Low),
        (2.5, DimensionBin::Medium),
        (3.0, DimensionBin::Medium),
        (3.9, DimensionBin::Medium),
        (4.0, DimensionBin::High),
        (5.0, DimensionBin::High),
    ];
    for (value, want) in table {
        let got = bin_dimension(value, &maps);
        ensure(got == want, || format!("{value} -> {got:?}, want {want:?}"))?;
    }
    for raw in ["excited", "exc", "Excited"] {
        ensure(maps.emotion(raw) == Some(Some(Emotion::Happy)), || format!("{raw:?} not merged into happy"))?;
    }
    Ok("7 bin values exact; excited -> happy".into())
}

// ---------------------------------------------------------------- binary runs

fn acnn(args: &[&str]) -> Result<Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_acnn"))
        .args(args)
        .env_remove("ACNN_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!(
            "acnn {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn temp() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

fn summary(dir: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(dir.join("summary.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn field(v: &serde_json::Value, key: &str) -> Result<f64, String> {
    v[key].as_f64().ok_or_else(|| format!("summary has no numeric {key:?}"))
}

fn synthetic_end_to_end() -> Outcome {
    let dir = temp()?;
    let corpus = dir.path().join("corpus");
    acnn(&["synth", "--out", s(&corpus)])?;
    let manifest = corpus.join("manifest.csv");

    let run = |variant: &str| -> Result<(f64, f64, Duration), String> {
        let out = dir.path().join(variant);
        let started = Instant::now();
        acnn(&[
            "cv", "--manifest", s(&manifest), "--features", "logmel", "--variant", variant, "--seeds", "2",
            "--epochs", E2E_EPOCHS, "--out", s(&out),
        ])?;
        let elapsed = started.elapsed();
        let sum = summary(&out)?;
        Ok((field(&sum, "mean")?, field(&sum, "min")?, elapsed))
    };
    let (acnn_mean, acnn_min, acnn_time) = run("acnn-mv")?;
    let (cnn_mean, _, cnn_time) = run("cnn-sv")?;
    let detail = format!(
        "acnn-mv mean WA {acnn_mean:.4} (min {acnn_min:.4}) in {:.0}s; cnn-sv mean WA {cnn_mean:.4} in {:.0}s",
        acnn_time.as_secs_f64(),
        cnn_time.as_secs_f64()
    );
    ensure(acnn_mean >= E2E_MIN_WA, || format!("{detail}; acnn-mv below {E2E_MIN_WA}"))?;
    ensure(acnn_time < E2E_BUDGET, || format!("{detail}; acnn-mv over {E2E_BUDGET:?}"))?;
    ensure(cnn_mean >= E2E_ABLATION_MIN_WA, || format!("{detail}; cnn-sv below {E2E_ABLATION_MIN_WA}"))?;
    Ok(detail)
}

fn length_sweep() -> Outcome {
    let dir = temp()?;
    let corpus = dir.path().join("corpus");
    // reduced corpus: 30 utterances per class keeps 16 cross-validations tractable
    acnn(&["synth", "--out", s(&corpus), "--per-class", "30"])?;
    let out = dir.path().join("sweep");
    acnn(&[
        "sweep", "--manifest", s(&corpus.join("manifest.csv")), "--features", "logmel,mfcc", "--variant", "acnn-mv",
        "--seeds", "1", "--epochs", "12", "--out", s(&out),
    ])?;
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).map_err(|e| e.to_string())?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let len: f64 = rec[1].parse().map_err(|_| format!("bad length {:?}", &rec[1]))?;
        let mean: f64 = rec[2].parse().map_err(|_| format!("bad mean {:?}", &rec[2]))?;
        rows.push((rec[0].to_string(), len, mean));
    }
    ensure(rows.len() == SWEEP_LENGTHS.len() * 2, || format!("{} rows, want 16", rows.len()))?;
    let mut detail = Vec::new();
    for kind in ["logmel", "mfcc"] {
        let lens: Vec<f64> = rows.iter().filter(|r| r.0 == kind).map(|r| r.1).collect();
        ensure(lens == SWEEP_LENGTHS, || format!("{kind} lengths {lens:?}"))?;
        let at = |l: f64| rows.iter().find(|r| r.0 == kind && r.1 == l).map(|r| r.2).unwrap();
        let (short, full) = (at(1.0), at(7.5));
        detail.push(format!("{kind} WA@1s {short:.3} vs WA@7.5s {full:.3}"));
        ensure(short <= full + SWEEP_SLACK, || format!("{kind}: WA@1s {short:.4} > WA@7.5s {full:.4} + {SWEEP_SLACK}"))?;
    }
    Ok(format!("16 rows; {}", detail.join("; ")))
}

fn tree_bytes(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = temp()?;
    let mut compared = 0usize;
    let mut trees = Vec::new();
    for round in 0..2 {
        let base = dir.path().join(format!("r{round}"));
        let corpus = base.join("corpus");
        let manifest = corpus.join("manifest.csv");
        let m = s(&manifest).to_string();
        acnn(&[
            "synth", "--out", s(&corpus), "--per-class", "8", "--sessions", "2", "--min-duration", "1.0",
            "--max-duration", "1.3", "--seed", "11",
        ])?;
        acnn(&["extract", "--manifest", &m, "--features", "logmel,mfcc,prosody", "--out", s(&base.join("feats"))])?;
        let common = ["--manifest", m.as_str(), "--seed", "5", "--epochs", "3"];
        let train_out = base.join("train");
        acnn(&[&["train"][..], &common, &["--features", "mfcc", "--out", s(&train_out)]].concat())?;
        let cv_out = base.join("cv");
        acnn(&[&["cv"][..], &common, &["--features", "logmel", "--seeds", "2", "--out", s(&cv_out)]].concat())?;
        acnn(&[
            &["sweep"][..],
            &common,
            &["--features", "prosody", "--lengths", "1.5,1", "--seeds", "1", "--out", s(&base.join("sweep"))],
        ]
        .concat())?;
        acnn(&["report", s(&cv_out), "--out", s(&base.join("report"))])?;
        // manifests record paths relative to their own directory, so the trees compare directly
        trees.push(tree_bytes(&base)?);
    }
    let (a, b) = (&trees[0], &trees[1]);
    let names = |t: &[(PathBuf, Vec<u8>)]| t.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>();
    ensure(names(a) == names(b), || "runs produced different file sets".into())?;
    for ((path, x), (_, y)) in a.iter().zip(b) {
        ensure(x == y, || format!("{} differs between runs", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext == "csv" || ext == "json" {
            compared += 1;
        }
    }
    Ok(format!(
        "synth, extract, train, cv, sweep, report repeated: {} files byte-identical ({compared} CSV/JSON)",
        a.len()
    ))
}

fn corpus_protocol() -> Outcome {
    let Some(path) = std::env::var_os("IEMOCAP_MANIFEST") else {
        return Ok("SKIP: IEMOCAP_MANIFEST not set".into());
    };
    let corpus = Corpus::load(Path::new(&path)).map_err(|e| e.to_string())?;
    let maps = LabelMaps::default();
    let mut sizes = Vec::new();
    for subset in [Subset::Improvised, Subset::Scripted, Subset::All] {
        sizes.push(corpus.subset(subset).map_err(|e| e.to_string())?.labeled(&maps).len());
    }
    ensure(sizes == [2943, 2588, 5531], || format!("subset sizes {sizes:?}, want [2943, 2588, 5531]"))?;
    let classes = corpus.class_counts(&maps);
    ensure(classes == [1103, 1636, 1084, 1708], || format!("class counts {classes:?}"))?;
    let labeled = corpus.labeled(&maps);
    let folds = make_loso_folds(&labeled, 1).map_err(|e| e.to_string())?;
    for f in &folds {
        ensure(f.test_speakers.iter().all(|s| !f.train_speakers.contains(s)), || {
            format!("fold {} shares a speaker between train and test", f.fold)
        })?;
    }
    Ok(format!("subsets {sizes:?}, classes {classes:?}, {} speaker-disjoint folds", folds.len()))
}
