//! Confusion-matrix error analysis and the comparison grid over experiment
//! summaries (feature × {SV, MV} × {CNN, ACNN} × {mean, min, max}).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Emotion, Subset};
use crate::error::{Error, Result};
use crate::model::Variant;
use crate::train::{Confusion, ExperimentSummary, SUMMARY_SCHEMA};

/// Row-normalized view of a confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Percent of each true class, in hundredths (`2512` is 25.12%).
    pub percent_hundredths: Vec<Vec<u64>>,
    pub recalls: Vec<Option<f64>>,
    pub weighted_accuracy: f64,
}

impl ConfusionReport {
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        self.percent_hundredths
            .iter()
            .map(|r| r.iter().map(|&h| h as f64 / 100.0).collect())
            .collect()
    }
}

/// Row percentages in hundredths, each rounded half-up. When the rounded row
/// overshoots 100.00 by more than one hundredth (several entries landing on
/// exact halves), the overshoot is taken back from those half entries, first
/// index first.
fn row_hundredths(row: &[u64]) -> Vec<u64> {
    let total: u64 = row.iter().sum();
    if total == 0 {
        return vec![0; row.len()];
    }
    let mut out: Vec<u64> = row.iter().map(|&c| (20_000 * c + total) / (2 * total)).collect();
    let sum: u64 = out.iter().sum();
    if sum > 10_001 {
        let mut excess = sum - 10_001;
        for (i, &c) in row.iter().enumerate() {
            if excess == 0 {
                break;
            }
            if (20_000 * c) % (2 * total) == total {
                out[i] -= 1;
                excess -= 1;
            }
        }
    }
    out
}

fn class_labels(n: usize) -> Vec<String> {
    if n == Emotion::ALL.len() {
        Emotion::ALL.iter().map(|e| e.name().to_string()).collect()
    } else {
        (0..n).map(|i| format!("class{i}")).collect()
    }
}

pub fn confusion_report(counts: &[Vec<u64>]) -> Result<ConfusionReport> {
    let c = Confusion::from_counts(counts.to_vec())?;
    if c.total() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(ConfusionReport {
        labels: class_labels(c.classes()),
        percent_hundredths: c.counts.iter().map(|r| row_hundredths(r)).collect(),
        recalls: c.recalls(),
        weighted_accuracy: c.weighted_accuracy(),
        counts: c.counts,
    })
}

fn hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

/// Text table plus CSV of row-normalized percentages (rows are true classes,
/// columns predictions).
pub fn render_confusion(counts: &[Vec<u64>]) -> Result<(String, String)> {
    let r = confusion_report(counts)?;
    let width = r.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(9);
    let mut text = format!("{:<width$}", "true\\pred");
    for l in &r.labels {
        let _ = write!(text, " {:>width$}", l);
    }
    let _ = writeln!(text, " {:>width$}", "n");
    for (i, l) in r.labels.iter().enumerate() {
        let _ = write!(text, "{:<width$}", l);
        for &h in &r.percent_hundredths[i] {
            let _ = write!(text, " {:>width$}", hundredths(h));
        }
        let _ = writeln!(text, " {:>width$}", r.counts[i].iter().sum::<u64>());
    }
    let _ = writeln!(text, "WA {:.4}", r.weighted_accuracy);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["true".to_string()];
    header.extend(r.labels.iter().cloned());
    w.write_record(&header)?;
    for (i, l) in r.labels.iter().enumerate() {
        let mut row = vec![l.clone()];
        row.extend(r.percent_hundredths[i].iter().map(|&h| hundredths(h)));
        w.write_record(&row)?;
    }
    let csv_text = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8");
    Ok((text, csv_text))
}

/// Column order of the comparison grid: SV then MV, CNN before ACNN.
pub const GRID_VARIANTS: [Variant; 4] = [Variant::CnnSv, Variant::AcnnSv, Variant::CnnMv, Variant::AcnnMv];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub seeds: usize,
    pub fingerprint: String,
    pub source: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellState {
    Empty,
    Value(GridCell),
    /// Several inputs with different configurations or results claim the cell.
    Conflict(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub subset: Subset,
    pub features: String,
    /// Indexed like [`GRID_VARIANTS`].
    pub cells: Vec<CellState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportGrid {
    pub rows: Vec<GridRow>,
}

impl ReportGrid {
    pub fn conflicts(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            for (v, c) in GRID_VARIANTS.iter().zip(&r.cells) {
                if let CellState::Conflict(paths) = c {
                    let list: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                    out.push(format!("{} {} {}: {}", r.subset.name(), r.features, v, list.join(", ")));
                }
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| subset | features |");
        for v in GRID_VARIANTS {
            let _ = write!(s, " {v} μ | {v} min | {v} max |");
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---:|".repeat(3 * GRID_VARIANTS.len()));
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "| {} | {} |", r.subset.name(), r.features);
            for c in &r.cells {
                match c {
                    CellState::Empty => s.push_str(" | | |"),
                    CellState::Value(g) => {
                        let _ = write!(s, " {:.2} | {:.2} | {:.2} |", 100.0 * g.mean, 100.0 * g.min, 100.0 * g.max);
                    }
                    CellState::Conflict(_) => s.push_str(" conflict | conflict | conflict |"),
                }
            }
            s.push('\n');
        }
        let conflicts = self.conflicts();
        if !conflicts.is_empty() {
            s.push_str("\nConflicting inputs (not averaged):\n");
            for c in conflicts {
                let _ = writeln!(s, "- {c}");
            }
        }
        s
    }

    /// Long format: one line per filled or conflicting cell, WA as fractions.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["subset", "features", "view", "model", "mean", "min", "max", "seeds", "fingerprint", "status"])?;
        for r in &self.rows {
            for (v, c) in GRID_VARIANTS.iter().zip(&r.cells) {
                let view = if v.multi_view() { "MV" } else { "SV" };
                let model = if v.attention() { "ACNN" } else { "CNN" };
                let head = [r.subset.name().to_string(), r.features.clone(), view.into(), model.into()];
                match c {
                    CellState::Empty => {}
                    CellState::Value(g) => {
                        let mut rec = head.to_vec();
                        rec.extend([
                            g.mean.to_string(),
                            g.min.to_string(),
                            g.max.to_string(),
                            g.seeds.to_string(),
                            g.fingerprint.clone(),
                            "ok".into(),
                        ]);
                        w.write_record(&rec)?;
                    }
                    CellState::Conflict(_) => {
                        let mut rec = head.to_vec();
                        rec.extend(["", "", "", "", ""].map(String::from));
                        rec.push("conflict".into());
                        w.write_record(&rec)?;
                    }
                }
            }
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
    }
}

pub fn read_summary(path: &Path) -> Result<ExperimentSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => e.into(),
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let schema = value.get("schema").and_then(|s| s.as_str()).unwrap_or("<none>");
    if schema != SUMMARY_SCHEMA {
        return Err(Error::SchemaMismatch(format!(
            "{}: schema {schema}, expected {SUMMARY_SCHEMA}",
            path.display()
        )));
    }
    serde_json::from_value(value).map_err(|e| Error::SchemaMismatch(format!("{}: {e}", path.display())))
}

/// Merges summaries into the comparison grid. Two inputs for one cell are
/// accepted only when they are identical results; otherwise the cell is
/// marked as a conflict.
pub fn build_grid(inputs: &[(PathBuf, ExperimentSummary)]) -> ReportGrid {
    let mut cells: BTreeMap<(Subset, String), Vec<Vec<(&Path, &ExperimentSummary)>>> = BTreeMap::new();
    for (path, s) in inputs {
        let col = GRID_VARIANTS.iter().position(|&v| v == s.variant).expect("every variant has a column");
        cells
            .entry((s.subset, s.features.clone()))
            .or_insert_with(|| vec![Vec::new(); GRID_VARIANTS.len()])[col]
            .push((path.as_path(), s));
    }
    let rows = cells
        .into_iter()
        .map(|((subset, features), cols)| GridRow {
            subset,
            features,
            cells: cols
                .into_iter()
                .map(|entries| match entries.as_slice() {
                    [] => CellState::Empty,
                    [(path, first), rest @ ..] => {
                        let same = |s: &ExperimentSummary| {
                            s.fingerprint == first.fingerprint
                                && s.corpus_hash == first.corpus_hash
                                && s.per_seed_wa == first.per_seed_wa
                        };
                        if rest.iter().all(|(_, s)| same(s)) {
                            CellState::Value(GridCell {
                                mean: first.mean,
                                min: first.min,
                                max: first.max,
                                seeds: first.per_seed_wa.len(),
                                fingerprint: first.fingerprint.clone(),
                                source: path.to_path_buf(),
                            })
                        } else {
                            CellState::Conflict(entries.iter().map(|(p, _)| p.to_path_buf()).collect())
                        }
                    }
                })
                .collect(),
        })
        .collect();
    ReportGrid { rows }
}

/// Reads summary files (or directories holding `summary.json`) and builds
/// the grid.
pub fn cmd_report(paths: &[PathBuf]) -> Result<ReportGrid> {
    let mut inputs = Vec::with_capacity(paths.len());
    for p in paths {
        let file = if p.is_dir() { p.join("summary.json") } else { p.clone() };
        let s = read_summary(&file)?;
        inputs.push((file, s));
    }
    Ok(build_grid(&inputs))
}
