use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabelMaps;
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 7] = [
    "utt_id",
    "wav_path",
    "speaker_id",
    "session_id",
    "emotion",
    "activation",
    "valence",
];

/// Recording scenario of an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Improv,
    Script,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Improv => "improv",
            Scenario::Script => "script",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "improv" | "improvised" => Some(Scenario::Improv),
            "script" | "scripted" => Some(Scenario::Script),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utt_id: String,
    /// Resolved against the manifest's directory when relative.
    pub wav_path: PathBuf,
    pub speaker_id: String,
    pub session_id: String,
    /// Raw label as written in the manifest.
    pub emotion: String,
    /// Annotation on the 1-5 scale.
    pub activation: f64,
    pub valence: f64,
    pub scenario: Option<Scenario>,
}

/// Parsed manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub records: Vec<UtteranceRecord>,
    pub has_scenario: bool,
    /// Rows whose emotion label is not in the label map.
    pub unknown_labels: usize,
}

/// Reads a manifest CSV with header
/// `utt_id,wav_path,speaker_id,session_id,emotion,activation,valence[,scenario]`.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, base)
}

pub(crate) fn parse_manifest(text: &str, base: &Path) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty manifest".into())),
    };
    let cols: Vec<&str> = header.iter().collect();
    let has_scenario = match cols.as_slice() {
        [fixed @ .., "scenario"] if fixed == MANIFEST_HEADER => true,
        fixed if fixed == MANIFEST_HEADER => false,
        _ => {
            return Err(parse_err(
                1,
                format!("header must be `{}[,scenario]`", MANIFEST_HEADER.join(",")),
            ))
        }
    };
    let maps = LabelMaps::default();
    let mut records = Vec::new();
    let mut unknown = 0;
    for row in rows {
        let row = row.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.iter().all(str::is_empty) {
            continue;
        }
        let want = MANIFEST_HEADER.len() + usize::from(has_scenario);
        if row.len() != want {
            return Err(parse_err(line, format!("expected {want} fields, found {}", row.len())));
        }
        let dim = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = row[i]
                .parse()
                .map_err(|_| parse_err(line, format!("{name} `{}` is not a number", &row[i])))?;
            if !(1.0..=5.0).contains(&v) {
                return Err(parse_err(line, format!("{name} {v} outside [1, 5]")));
            }
            Ok(v)
        };
        let activation = dim(5, "activation")?;
        let valence = dim(6, "valence")?;
        for (i, name) in MANIFEST_HEADER.iter().enumerate().take(5) {
            if row[i].is_empty() {
                return Err(parse_err(line, format!("empty {name}")));
            }
        }
        let scenario = if has_scenario {
            Some(Scenario::parse(&row[7]).ok_or_else(|| parse_err(line, format!("unknown scenario `{}`", &row[7])))?)
        } else {
            None
        };
        if !maps.is_known(&row[4]) {
            unknown += 1;
        }
        let wav = PathBuf::from(&row[1]);
        records.push(UtteranceRecord {
            utt_id: row[0].to_string(),
            wav_path: if wav.is_relative() { base.join(wav) } else { wav },
            speaker_id: row[2].to_string(),
            session_id: row[3].to_string(),
            emotion: row[4].to_string(),
            activation,
            valence,
            scenario,
        });
    }
    if unknown > 0 {
        log::warn!("{unknown} manifest rows carry unknown emotion labels and are excluded");
    }
    Ok(Manifest {
        records,
        has_scenario,
        unknown_labels: unknown,
    })
}

fn parse_err(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

/// Writes records with paths relative to `base` where possible.
pub fn write_manifest(path: &Path, records: &[UtteranceRecord], base: &Path) -> Result<()> {
    let has_scenario = records.iter().any(|r| r.scenario.is_some());
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<&str> = MANIFEST_HEADER.to_vec();
    if has_scenario {
        header.push("scenario");
    }
    w.write_record(&header)?;
    for r in records {
        let wav = r.wav_path.strip_prefix(base).unwrap_or(&r.wav_path);
        let mut row = vec![
            r.utt_id.clone(),
            wav.to_string_lossy().into_owned(),
            r.speaker_id.clone(),
            r.session_id.clone(),
            r.emotion.clone(),
            r.activation.to_string(),
            r.valence.to_string(),
        ];
        if has_scenario {
            row.push(r.scenario.map_or("", Scenario::name).to_string());
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    crate::io_util::write_atomic(path, &bytes)
}
