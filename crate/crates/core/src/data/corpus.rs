use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use super::{cut_pad, map_labels, target_frames, LabelMaps, Scenario, UtteranceRecord};
use crate::dsp::wav::read_wav;
use crate::dsp::{compute_speaker_stats, normalize, FeatureExtractor, FeatureKind, FeatureMatrix, FrameConfig, SpeakerStats, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::model::Labels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Improvised,
    Scripted,
    All,
}

impl Subset {
    pub fn name(self) -> &'static str {
        match self {
            Subset::Improvised => "improvised",
            Subset::Scripted => "scripted",
            Subset::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "improvised" => Some(Subset::Improvised),
            "scripted" => Some(Subset::Scripted),
            "all" => Some(Subset::All),
            _ => None,
        }
    }
}

/// A loaded manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<UtteranceRecord>,
    pub has_scenario: bool,
}

impl From<Manifest> for Corpus {
    fn from(m: Manifest) -> Self {
        Self {
            records: m.records,
            has_scenario: m.has_scenario,
        }
    }
}

impl Corpus {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(super::load_manifest(path)?.into())
    }

    /// Utterances of one recording scenario (or all of them).
    pub fn subset(&self, selector: Subset) -> Result<Corpus> {
        let want = match selector {
            Subset::All => return Ok(self.clone()),
            Subset::Improvised => Scenario::Improv,
            Subset::Scripted => Scenario::Script,
        };
        if !self.has_scenario {
            return Err(Error::MissingScenarioColumn);
        }
        let records: Vec<_> = self
            .records
            .iter()
            .filter(|r| r.scenario == Some(want))
            .cloned()
            .collect();
        if records.is_empty() {
            return Err(Error::EmptySubset(selector.name().into()));
        }
        Ok(Corpus {
            records,
            has_scenario: true,
        })
    }

    /// Records that map onto the four emotion classes.
    pub fn labeled(&self, maps: &LabelMaps) -> Vec<(&UtteranceRecord, Labels)> {
        self.records
            .iter()
            .filter_map(|r| map_labels(r, maps).map(|l| (r, l)))
            .collect()
    }

    /// Per-class counts after label mapping, indexed like `Emotion::ALL`.
    pub fn class_counts(&self, maps: &LabelMaps) -> [usize; 4] {
        let mut counts = [0; 4];
        for (_, l) in self.labeled(maps) {
            counts[l.emotion] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOptions {
    pub kind: FeatureKind,
    pub frame: FrameConfig,
    /// Inputs are cut or zero-padded to the frame count of this many seconds.
    pub max_len_seconds: f64,
    /// Cut the waveform before extraction (signal-length experiments).
    pub truncate_seconds: Option<f64>,
}

impl PrepareOptions {
    pub fn new(kind: FeatureKind) -> Self {
        Self {
            kind,
            frame: FrameConfig::default(),
            max_len_seconds: 7.5,
            truncate_seconds: None,
        }
    }

    /// Fixed number of frames of every prepared input.
    pub fn input_frames(&self) -> usize {
        let secs = match self.truncate_seconds {
            Some(t) => t.min(self.max_len_seconds),
            None => self.max_len_seconds,
        };
        target_frames(secs, &self.frame, SAMPLE_RATE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedUtterance {
    pub utt_id: String,
    pub speaker_id: String,
    pub session_id: String,
    pub labels: Labels,
    /// Normalized, cut/padded `d × s` input.
    pub input: RealMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub kind: FeatureKind,
    pub dims: usize,
    pub frames: usize,
    pub utterances: Vec<PreparedUtterance>,
    pub speaker_stats: Vec<SpeakerStats>,
}

/// Reads every labeled utterance, extracts features, normalizes each speaker
/// by statistics over that speaker's real (unpadded) frames, then cuts or pads
/// to a fixed length.
pub fn prepare_corpus(corpus: &Corpus, opts: &PrepareOptions) -> Result<PreparedCorpus> {
    let maps = LabelMaps::default();
    let extractor = FeatureExtractor::new(opts.frame.clone(), SAMPLE_RATE)?;
    let labeled = corpus.labeled(&maps);
    if labeled.is_empty() {
        return Err(Error::EmptySubset("no labeled utterances".into()));
    }
    let mut raw: Vec<FeatureMatrix> = Vec::with_capacity(labeled.len());
    for (rec, _) in &labeled {
        let mut clip = read_wav(&rec.wav_path)?;
        if let Some(t) = opts.truncate_seconds {
            clip = clip.truncated(t);
        }
        raw.push(extractor.extract(opts.kind, &clip)?);
    }

    let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (rec, _)) in labeled.iter().enumerate() {
        by_speaker.entry(rec.speaker_id.as_str()).or_default().push(i);
    }
    let mut stats_of = vec![0usize; labeled.len()];
    let mut speaker_stats = Vec::with_capacity(by_speaker.len());
    for (speaker, idx) in &by_speaker {
        let mats: Vec<&FeatureMatrix> = idx.iter().map(|&i| &raw[i]).collect();
        let stats = compute_speaker_stats(speaker, &mats)?;
        for &i in idx {
            stats_of[i] = speaker_stats.len();
        }
        speaker_stats.push(stats);
    }

    let frames = opts.input_frames();
    let dims = raw[0].dims();
    let utterances = labeled
        .iter()
        .zip(&raw)
        .enumerate()
        .map(|(i, ((rec, labels), m))| {
            let z = normalize(m, &speaker_stats[stats_of[i]])?;
            Ok(PreparedUtterance {
                utt_id: rec.utt_id.clone(),
                speaker_id: rec.speaker_id.clone(),
                session_id: rec.session_id.clone(),
                labels: *labels,
                input: cut_pad(&z, frames).data,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedCorpus {
        kind: opts.kind,
        dims,
        frames,
        utterances,
        speaker_stats,
    })
}
