//! Harmonic-plus-noise "emotional speech" for desk-scale end-to-end runs.
//!
//! Every utterance is a voiced segment framed by short near-silent lead-in and
//! tail. Classes differ in pitch level and movement, loudness, period jitter
//! and breathiness; speakers differ in pitch offset, gain and spectral tilt.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{write_manifest, Emotion, Scenario, UtteranceRecord};
use crate::dsp::wav::write_wav;
use crate::dsp::{AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub emotion: Emotion,
    /// Hz.
    pub base_f0: f64,
    /// Depth of the slow F0 excursion, Hz.
    pub f0_variability: f64,
    /// Peak amplitude of the voiced segment.
    pub amplitude: f64,
    /// Relative per-period F0 perturbation (std).
    pub jitter: f64,
    /// Share of white noise in the voiced segment, `[0, 1]`.
    pub noise_mix: f64,
    /// Annotation written to the manifest, 1-5.
    pub activation: f64,
    pub valence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// One profile per class, in `Emotion::ALL` order.
    pub profiles: Vec<ClassProfile>,
    pub utterances_per_class: usize,
    /// Total duration range in seconds.
    pub min_duration: f64,
    pub max_duration: f64,
    pub sessions: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = |emotion, base_f0, f0_variability, amplitude, jitter, noise_mix, activation, valence| ClassProfile {
            emotion,
            base_f0,
            f0_variability,
            amplitude,
            jitter,
            noise_mix,
            activation,
            valence,
        };
        Self {
            profiles: vec![
                p(Emotion::Angry, 200.0, 30.0, 0.55, 0.030, 0.35, 4.5, 1.5),
                p(Emotion::Happy, 240.0, 40.0, 0.45, 0.010, 0.10, 4.5, 4.5),
                p(Emotion::Sad, 140.0, 8.0, 0.15, 0.005, 0.15, 1.5, 1.5),
                p(Emotion::Neutral, 170.0, 15.0, 0.30, 0.008, 0.05, 3.0, 3.0),
            ],
            utterances_per_class: 200,
            min_duration: 1.5,
            max_duration: 4.0,
            sessions: 5,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.profiles.len() != 4 {
            return bad(format!("need 4 class profiles, got {}", self.profiles.len()));
        }
        for (p, e) in self.profiles.iter().zip(Emotion::ALL) {
            if p.emotion != e {
                return bad(format!("profile for {} found where {e} expected", p.emotion));
            }
            if !(1.0..=5.0).contains(&p.activation) || !(1.0..=5.0).contains(&p.valence) {
                return bad(format!("{e}: activation/valence outside [1, 5]"));
            }
            if p.base_f0 <= 0.0 || p.amplitude <= 0.0 || !(0.0..=1.0).contains(&p.noise_mix) {
                return bad(format!("{e}: invalid acoustic profile"));
            }
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (&self.profiles[i], &self.profiles[j]);
                if (a.base_f0, a.f0_variability, a.amplitude, a.jitter, a.noise_mix)
                    == (b.base_f0, b.f0_variability, b.amplitude, b.jitter, b.noise_mix)
                {
                    return bad(format!("{} and {} share a profile", a.emotion, b.emotion));
                }
            }
        }
        if self.sessions == 0 || self.utterances_per_class == 0 {
            return bad("need at least one session and one utterance per class".into());
        }
        if self.utterances_per_class < self.speakers() {
            return bad(format!(
                "{} utterances per class cannot cover {} speakers",
                self.utterances_per_class,
                self.speakers()
            ));
        }
        if !(self.min_duration >= 0.5 && self.min_duration <= self.max_duration) {
            return bad(format!("duration range {}..{} s", self.min_duration, self.max_duration));
        }
        Ok(())
    }

    pub fn speakers(&self) -> usize {
        self.sessions * 2
    }
}

struct Speaker {
    id: String,
    session: String,
    f0_offset: f64,
    gain: f64,
    tilt: f64,
}

fn make_speakers(cfg: &SynthConfig) -> Vec<Speaker> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::MAX));
    (0..cfg.speakers())
        .map(|i| {
            let session = i / 2 + 1;
            Speaker {
                id: format!("Ses{session:02}{}", if i % 2 == 0 { 'F' } else { 'M' }),
                session: format!("Ses{session:02}"),
                f0_offset: rng.gen_range(-15.0..15.0),
                gain: rng.gen_range(0.8..1.2),
                tilt: rng.gen_range(-0.6..0.6),
            }
        })
        .collect()
}

/// Renders one utterance. Returns the samples and the voiced segment as
/// `(start, end)` sample indices.
fn render(profile: &ClassProfile, speaker: &Speaker, duration: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, (usize, usize)) {
    let sr = f64::from(SAMPLE_RATE);
    let n = (duration * sr).round() as usize;
    let lead = (rng.gen_range(0.1..0.3) * sr) as usize;
    let tail = (rng.gen_range(0.1..0.3) * sr) as usize;
    let start = lead.min(n);
    let end = n.saturating_sub(tail).max(start);
    let gauss = Normal::new(0.0, 1.0).unwrap();

    let mut out = vec![0.0; n];
    for v in out.iter_mut() {
        *v = 0.002 * gauss.sample(rng);
    }

    let base = profile.base_f0 + speaker.f0_offset;
    let mod_rate = rng.gen_range(2.0..4.0);
    let mod_phase = rng.gen_range(0.0..2.0 * PI);
    let mut phase = 0.0;
    let mut period_scale = 1.0 + profile.jitter * gauss.sample(rng);
    let voiced_len = end - start;
    let ramp = (0.03 * sr) as usize;
    let harmonics = 10;
    let norm: f64 = (1..=harmonics).map(|k| 1.0 / k as f64).sum();
    for i in 0..voiced_len {
        let t = i as f64 / sr;
        let f0 = (base + profile.f0_variability * (2.0 * PI * mod_rate * t + mod_phase).sin()) * period_scale;
        phase += 2.0 * PI * f0 / sr;
        if phase >= 2.0 * PI {
            phase -= 2.0 * PI;
            period_scale = 1.0 + profile.jitter * gauss.sample(rng);
        }
        let harm: f64 = (1..=harmonics)
            .map(|k| (k as f64 * phase).sin() / k as f64)
            .sum::<f64>()
            / norm;
        let noise = 0.5 * gauss.sample(rng);
        let env = if i < ramp {
            i as f64 / ramp as f64
        } else if voiced_len - i < ramp {
            (voiced_len - i) as f64 / ramp as f64
        } else {
            1.0
        };
        out[start + i] += profile.amplitude * env * ((1.0 - profile.noise_mix) * harm + profile.noise_mix * noise);
    }

    // speaker colouring: one-pole tilt then gain
    let mut prev = 0.0;
    for v in out.iter_mut() {
        let y = *v + speaker.tilt * prev;
        prev = y;
        *v = (y * (1.0 - speaker.tilt.abs()) * speaker.gain).clamp(-0.99, 0.99);
    }
    (out, (start, end))
}

/// Writes `wav/<utt_id>.wav` files and `manifest.csv` into `out_dir` and
/// returns the manifest records. Each speaker gets every class; scenarios
/// alternate between improvised and scripted.
pub fn synth_generate(cfg: &SynthConfig, out_dir: &Path) -> Result<Vec<UtteranceRecord>> {
    cfg.validate()?;
    let wav_dir = out_dir.join("wav");
    std::fs::create_dir_all(&wav_dir)?;
    let speakers = make_speakers(cfg);
    let mut records = Vec::with_capacity(4 * cfg.utterances_per_class);
    let mut global = 0u64;
    for (ci, profile) in cfg.profiles.iter().enumerate() {
        for j in 0..cfg.utterances_per_class {
            let speaker = &speakers[j % speakers.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, global));
            global += 1;
            let duration = rng.gen_range(cfg.min_duration..=cfg.max_duration);
            let (samples, _) = render(profile, speaker, duration, &mut rng);
            let utt_id = format!("{}_{}_{:04}", speaker.id, profile.emotion, j);
            let wav_path: PathBuf = wav_dir.join(format!("{utt_id}.wav"));
            write_wav(&wav_path, &AudioClip::new(samples, SAMPLE_RATE)?)?;
            records.push(UtteranceRecord {
                utt_id,
                wav_path,
                speaker_id: speaker.id.clone(),
                session_id: speaker.session.clone(),
                emotion: profile.emotion.name().to_string(),
                activation: profile.activation,
                valence: profile.valence,
                scenario: Some(if (ci + j) % 2 == 0 { Scenario::Improv } else { Scenario::Script }),
            });
        }
    }
    write_manifest(&out_dir.join("manifest.csv"), &records, out_dir)?;
    Ok(records)
}

/// Voiced span (in samples) of utterance `index` in generation order. Used by
/// attention probes.
pub fn voiced_span(cfg: &SynthConfig, index: usize) -> Option<(usize, usize)> {
    let class = index / cfg.utterances_per_class;
    let j = index % cfg.utterances_per_class;
    let profile = cfg.profiles.get(class)?;
    let speakers = make_speakers(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, index as u64));
    let duration = rng.gen_range(cfg.min_duration..=cfg.max_duration);
    Some(render(profile, &speakers[j % speakers.len()], duration, &mut rng).1)
}
