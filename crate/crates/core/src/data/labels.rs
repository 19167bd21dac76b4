use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::UtteranceRecord;
use crate::model::Labels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Angry,
    Happy,
    Sad,
    Neutral,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Angry, Emotion::Happy, Emotion::Sad, Emotion::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Angry => "angry",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Neutral => "neutral",
        }
    }
}

impl std::fmt::Display for Emotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionBin {
    Low,
    Medium,
    High,
}

impl DimensionBin {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Raw label → class mapping plus the activation/valence bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMaps {
    /// `None` marks a known label that is deliberately excluded.
    pub emotions: HashMap<String, Option<Emotion>>,
    /// Values `<= low_max` are low.
    pub low_max: f64,
    /// Values `>= high_min` are high.
    pub high_min: f64,
}

impl Default for LabelMaps {
    fn default() -> Self {
        let mut emotions = HashMap::new();
        for (raw, e) in [
            ("ang", Emotion::Angry),
            ("angry", Emotion::Angry),
            ("hap", Emotion::Happy),
            ("happy", Emotion::Happy),
            ("exc", Emotion::Happy),
            ("excited", Emotion::Happy),
            ("sad", Emotion::Sad),
            ("neu", Emotion::Neutral),
            ("neutral", Emotion::Neutral),
        ] {
            emotions.insert(raw.to_string(), Some(e));
        }
        for raw in [
            "fea", "fear", "dis", "disgust", "fru", "frustrated", "frustration", "sur", "surprised", "surprise",
            "oth", "other", "xxx",
        ] {
            emotions.insert(raw.to_string(), None);
        }
        Self {
            emotions,
            low_max: 2.0,
            high_min: 4.0,
        }
    }
}

impl LabelMaps {
    /// `Some(Some(e))` mapped, `Some(None)` known but excluded, `None` unknown.
    pub fn emotion(&self, raw: &str) -> Option<Option<Emotion>> {
        self.emotions.get(&raw.trim().to_ascii_lowercase()).copied()
    }

    pub fn is_known(&self, raw: &str) -> bool {
        self.emotion(raw).is_some()
    }
}

/// low: `[1, 2]`, medium: `(2, 4)`, high: `[4, 5]` with the default edges.
pub fn bin_dimension(value: f64, maps: &LabelMaps) -> DimensionBin {
    if value <= maps.low_max {
        DimensionBin::Low
    } else if value >= maps.high_min {
        DimensionBin::High
    } else {
        DimensionBin::Medium
    }
}

/// Class indices for a record, or `None` when its emotion is excluded or unknown.
pub fn map_labels(record: &UtteranceRecord, maps: &LabelMaps) -> Option<Labels> {
    let emotion = maps.emotion(&record.emotion).flatten()?;
    Some(Labels {
        emotion: emotion.index(),
        activation: bin_dimension(record.activation, maps).index(),
        valence: bin_dimension(record.valence, maps).index(),
    })
}
