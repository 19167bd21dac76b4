//! Corpus ingestion, label mapping, fixed-length inputs and the synthetic
//! corpus generator.

mod corpus;
mod labels;
mod manifest;
mod prep;
mod synth;

pub use corpus::{prepare_corpus, Corpus, PrepareOptions, PreparedCorpus, PreparedUtterance, Subset};
pub use labels::{bin_dimension, map_labels, DimensionBin, Emotion, LabelMaps};
pub use manifest::{load_manifest, Manifest, write_manifest, Scenario, UtteranceRecord, MANIFEST_HEADER};
pub use prep::{cut_pad, fuse_features, target_frames};
pub use synth::{synth_generate, voiced_span, ClassProfile, SynthConfig};
