use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("clip too short: {samples} samples, one frame needs {frame_len}")]
    ClipTooShort { samples: usize, frame_len: usize },

    #[error("invalid frequency range: {0}")]
    InvalidRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("speaker statistics need at least 2 frames, got {0}")]
    InsufficientFrames(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("kernel width {width} exceeds input length {len}")]
    KernelTooWide { width: usize, len: usize },

    #[error("feature map of length {len} is shorter than pool size {pool}")]
    MapTooShort { len: usize, pool: usize },

    #[error("attention over an empty sequence")]
    EmptySequence,

    #[error("backward called without a training-mode forward cache")]
    MissingCache,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for head with {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("input has {found} frames, model needs at least {required}")]
    InputTooShort { required: usize, found: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("wav error in {path}: {msg}")]
    Wav { path: PathBuf, msg: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("frame count mismatch: {0} vs {1}")]
    FrameCountMismatch(usize, usize),

    #[error("subset selection needs the `scenario` manifest column")]
    MissingScenarioColumn,

    #[error("subset `{0}` is empty")]
    EmptySubset(String),

    #[error("malformed corpus: {0}")]
    MalformedCorpus(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
