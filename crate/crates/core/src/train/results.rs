//! Plain-text result artifacts.
//!
//! `runs.csv` has one row per (fold, seed):
//! `fold,test_session,seed,master_seed,subset,features,variant,wa,epochs,best_epoch,n_test,c0_0 .. c3_3,fingerprint`
//! where `cT_P` counts test utterances of true class `T` predicted as `P`
//! (classes in the order angry, happy, sad, neutral).
//!
//! `sweep.csv` has one row per (feature kind, length):
//! `features,length,mean,min,max,master_seed,fingerprint`.

use std::path::Path;

use super::runner::{ExperimentReport, ExperimentSummary, SweepRow};
use crate::error::Result;
use crate::io_util::write_atomic;

fn runs_header(classes: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "fold",
        "test_session",
        "seed",
        "master_seed",
        "subset",
        "features",
        "variant",
        "wa",
        "epochs",
        "best_epoch",
        "n_test",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for t in 0..classes {
        for p in 0..classes {
            h.push(format!("c{t}_{p}"));
        }
    }
    h.push("fingerprint".into());
    h
}

pub fn runs_csv(report: &ExperimentReport) -> Result<String> {
    let s = &report.summary;
    let classes = s.pooled_confusion.classes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(runs_header(classes))?;
    for r in &report.runs {
        let mut row = vec![
            r.fold.to_string(),
            r.test_session.clone(),
            r.seed.to_string(),
            s.master_seed.to_string(),
            s.subset.name().to_string(),
            r.features.clone(),
            r.variant.name().to_string(),
            r.wa.to_string(),
            r.epochs.to_string(),
            r.best_epoch.to_string(),
            r.confusion.total().to_string(),
        ];
        row.extend(r.confusion.counts.iter().flatten().map(|c| c.to_string()));
        row.push(r.fingerprint.clone());
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

pub fn summary_json(summary: &ExperimentSummary) -> Result<String> {
    let mut s = serde_json::to_string_pretty(summary)?;
    s.push('\n');
    Ok(s)
}

pub fn sweep_csv(rows: &[SweepRow], master_seed: u64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["features", "length", "mean", "min", "max", "master_seed", "fingerprint"])?;
    for r in rows {
        w.write_record([
            r.features.clone(),
            r.length.to_string(),
            r.mean.to_string(),
            r.min.to_string(),
            r.max.to_string(),
            master_seed.to_string(),
            r.fingerprint.clone(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

/// Writes `runs.csv` and `summary.json` into `dir`.
pub fn write_experiment(dir: &Path, report: &ExperimentReport) -> Result<()> {
    write_atomic(&dir.join("runs.csv"), runs_csv(report)?.as_bytes())?;
    write_atomic(&dir.join("summary.json"), summary_json(&report.summary)?.as_bytes())
}
