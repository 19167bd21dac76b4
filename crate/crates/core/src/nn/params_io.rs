use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

const PARAM_MAGIC: &[u8; 4] = b"ACNP";
const PARAM_VERSION: u32 = 1;

/// Serializes named tensors: magic `ACNP`, u32 version, u32 count, then per
/// tensor u16 name length, UTF-8 name, u32 rows, u32 cols and row-major f64
/// values. Little-endian throughout.
pub fn encode_params(tensors: &[(String, &RealMatrix)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PARAM_MAGIC);
    out.extend_from_slice(&PARAM_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, m) in tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("parameter file truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_params(bytes: &[u8]) -> Result<Vec<(String, RealMatrix)>> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4).ok() != Some(PARAM_MAGIC.as_slice()) {
        return Err(Error::Format("not an ACNP parameter file".into()));
    }
    let version = c.u32()?;
    if version != PARAM_VERSION {
        return Err(Error::Format(format!("unsupported parameter file version {version}")));
    }
    let count = c.u32()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = c.u16()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
            .to_string();
        let rows = c.u32()? as usize;
        let cols = c.u32()? as usize;
        let raw = c.take(rows * cols * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push((name, RealMatrix::from_vec(rows, cols, values)?));
    }
    if c.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after parameter tensors".into()));
    }
    Ok(out)
}

pub fn write_params(path: &Path, tensors: &[(String, &RealMatrix)]) -> Result<()> {
    crate::io_util::write_atomic(path, &encode_params(tensors))
}

pub fn read_params(path: &Path) -> Result<Vec<(String, RealMatrix)>> {
    decode_params(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_decode() {
        let m = RealMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let bytes = encode_params(&[("ab".to_string(), &m)]);
        assert_eq!(&bytes[..4], b"ACNP");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 2 + 2 + 4 + 4 + 16);
        assert_eq!(&bytes[14..16], b"ab");
        let back = decode_params(&bytes).unwrap();
        assert_eq!(back, vec![("ab".to_string(), m)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(decode_params(b"XXXX"), Err(Error::Format(_))));
        let m = RealMatrix::zeros(2, 2);
        let bytes = encode_params(&[("w".to_string(), &m)]);
        assert!(decode_params(&bytes[..bytes.len() - 1]).is_err());
    }
}
