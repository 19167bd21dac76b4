use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{PreparedUtterance, UtteranceRecord};
use crate::error::{Error, Result};
use crate::model::Labels;
use crate::seed::derive_seed;

/// Fraction of training utterances (per class) held out for early stopping.
pub const DEV_FRACTION: f64 = 0.1;

/// What fold construction needs to know about an utterance.
pub trait FoldMember {
    fn utt_id(&self) -> &str;
    fn speaker(&self) -> &str;
    fn session(&self) -> &str;
    fn emotion(&self) -> usize;
}

impl FoldMember for PreparedUtterance {
    fn utt_id(&self) -> &str {
        &self.utt_id
    }
    fn speaker(&self) -> &str {
        &self.speaker_id
    }
    fn session(&self) -> &str {
        &self.session_id
    }
    fn emotion(&self) -> usize {
        self.labels.emotion
    }
}

impl FoldMember for (&UtteranceRecord, Labels) {
    fn utt_id(&self) -> &str {
        &self.0.utt_id
    }
    fn speaker(&self) -> &str {
        &self.0.speaker_id
    }
    fn session(&self) -> &str {
        &self.0.session_id
    }
    fn emotion(&self) -> usize {
        self.1.emotion
    }
}

/// One leave-one-session-out split. Index vectors point into the utterance
/// slice the folds were built from and are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold: usize,
    pub test_session: String,
    pub test_speakers: Vec<String>,
    pub train_speakers: Vec<String>,
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
    pub dev_ids: Vec<String>,
}

/// One fold per session (sorted by id). Every session must hold exactly two
/// speakers. The dev split takes `round(10%)` of each emotion class of the
/// remaining utterances, shuffled with a stream derived from `seed`.
pub fn make_loso_folds<U: FoldMember>(utterances: &[U], seed: u64) -> Result<Vec<FoldSpec>> {
    let mut sessions: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut speaker_session: BTreeMap<&str, &str> = BTreeMap::new();
    for u in utterances {
        sessions.entry(u.session()).or_default().insert(u.speaker());
        if let Some(prev) = speaker_session.insert(u.speaker(), u.session()) {
            if prev != u.session() {
                return Err(Error::MalformedCorpus(format!(
                    "speaker {} appears in sessions {prev} and {}",
                    u.speaker(),
                    u.session()
                )));
            }
        }
    }
    if sessions.len() < 2 {
        return Err(Error::MalformedCorpus(format!(
            "need at least two sessions, found {}",
            sessions.len()
        )));
    }
    for (s, spk) in &sessions {
        if spk.len() != 2 {
            return Err(Error::MalformedCorpus(format!(
                "session {s} has {} speakers, expected 2",
                spk.len()
            )));
        }
    }

    let all_speakers: BTreeSet<&str> = speaker_session.keys().copied().collect();
    let mut folds = Vec::with_capacity(sessions.len());
    for (fold, (session, test_spk)) in sessions.iter().enumerate() {
        let mut test = Vec::new();
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, u) in utterances.iter().enumerate() {
            if u.session() == *session {
                test.push(i);
            } else {
                by_class.entry(u.emotion()).or_default().push(i);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x00de_0000 + fold as u64));
        let mut dev = Vec::new();
        let mut train = Vec::new();
        for idx in by_class.values_mut() {
            idx.shuffle(&mut rng);
            let take = (idx.len() as f64 * DEV_FRACTION).round() as usize;
            dev.extend_from_slice(&idx[..take]);
            train.extend_from_slice(&idx[take..]);
        }
        dev.sort_unstable();
        train.sort_unstable();
        folds.push(FoldSpec {
            fold,
            test_session: session.to_string(),
            test_speakers: test_spk.iter().map(|s| s.to_string()).collect(),
            train_speakers: all_speakers.difference(test_spk).map(|s| s.to_string()).collect(),
            dev_ids: dev.iter().map(|&i| utterances[i].utt_id().to_string()).collect(),
            train,
            dev,
            test,
        });
    }
    Ok(folds)
}
