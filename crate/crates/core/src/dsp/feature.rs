use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

const FEATURE_MAGIC: &[u8; 4] = b"ACNF";
const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    LogMel,
    Mfcc,
    Prosody,
    /// log Mel rows stacked over prosody rows
    Fused,
}

impl FeatureKind {
    pub fn code(self) -> u32 {
        match self {
            FeatureKind::LogMel => 0,
            FeatureKind::Mfcc => 1,
            FeatureKind::Prosody => 2,
            FeatureKind::Fused => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => FeatureKind::LogMel,
            1 => FeatureKind::Mfcc,
            2 => FeatureKind::Prosody,
            3 => FeatureKind::Fused,
            _ => return None,
        })
    }

    /// Dimension at default settings; `None` for fused matrices, whose size
    /// depends on their parts.
    pub fn default_dims(self) -> Option<usize> {
        match self {
            FeatureKind::LogMel => Some(26),
            FeatureKind::Mfcc => Some(13),
            FeatureKind::Prosody => Some(7),
            FeatureKind::Fused => None,
        }
    }

    /// Name used on the command line and in result files.
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::LogMel => "logmel",
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Prosody => "prosody",
            FeatureKind::Fused => "logmel+prosody",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "logmel" => FeatureKind::LogMel,
            "mfcc" => FeatureKind::Mfcc,
            "prosody" => FeatureKind::Prosody,
            "logmel+prosody" | "fused" => FeatureKind::Fused,
            _ => return None,
        })
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `d × s` matrix: one row per feature dimension, one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub data: RealMatrix,
    /// Seconds between frames.
    pub frame_shift: f64,
}

impl FeatureMatrix {
    pub fn new(kind: FeatureKind, data: RealMatrix, frame_shift: f64) -> Result<Self> {
        if !data.is_finite() {
            return Err(Error::Format(format!("{kind} matrix has non-finite entries")));
        }
        Ok(Self {
            kind,
            data,
            frame_shift,
        })
    }

    /// Skips the finiteness scan.
    pub fn unchecked(kind: FeatureKind, data: RealMatrix, frame_shift: f64) -> Self {
        Self {
            kind,
            data,
            frame_shift,
        }
    }

    pub(crate) fn from_columns(kind: FeatureKind, columns: &[Vec<f64>], d: usize, frame_shift: f64) -> Result<Self> {
        let mut data = RealMatrix::zeros(d, columns.len());
        for (t, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data.set(i, t, *v);
            }
        }
        Self::new(kind, data, frame_shift)
    }

    pub fn dims(&self) -> usize {
        self.data.rows()
    }

    pub fn frames(&self) -> usize {
        self.data.cols()
    }
}

/// Writes the `ACNF` container: magic, version, kind, d, s, frame shift, then
/// `d·s` row-major `f32` values, all little-endian.
pub fn write_feature_file(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let mut buf = Vec::with_capacity(28 + 4 * m.data.len());
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    buf.extend_from_slice(&m.kind.code().to_le_bytes());
    buf.extend_from_slice(&(m.dims() as u32).to_le_bytes());
    buf.extend_from_slice(&(m.frames() as u32).to_le_bytes());
    buf.extend_from_slice(&m.frame_shift.to_le_bytes());
    for v in m.data.as_slice() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    crate::io_util::write_atomic(path, &buf)
}

pub fn read_feature_file(path: &Path) -> Result<FeatureMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut r = bytes.as_slice();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Format("truncated feature header".into()))?;
    if &magic != FEATURE_MAGIC {
        return Err(Error::Format(format!("bad feature magic {magic:?}")));
    }
    let mut u32_field = || -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(|_| Error::Format("truncated feature header".into()))?;
        Ok(u32::from_le_bytes(b))
    };
    let version = u32_field()?;
    if version != FEATURE_VERSION {
        return Err(Error::Format(format!("unsupported feature file version {version}")));
    }
    let code = u32_field()?;
    let kind = FeatureKind::from_code(code).ok_or_else(|| Error::Format(format!("unknown feature kind {code}")))?;
    let d = u32_field()? as usize;
    let s = u32_field()? as usize;
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated feature header".into()))?;
    let frame_shift = f64::from_le_bytes(b);
    if r.len() != 4 * d * s {
        return Err(Error::Format(format!("expected {} value bytes, found {}", 4 * d * s, r.len())));
    }
    let values = r
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    FeatureMatrix::new(kind, RealMatrix::from_vec(d, s, values)?, frame_shift)
}
