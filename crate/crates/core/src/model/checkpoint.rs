//! "HHNM" checkpoints: magic, LE u32 version, LE u32 tensor count, then per
//! tensor LE u32 rows, LE u32 cols and row-major LE f64 values.

use std::fs;
use std::path::Path;

use super::state::ModelState;
use crate::error::{HhnError, Result};
use crate::kernel::DenseMatrix;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HHNM";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(state: &ModelState) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * state.n_scalars() + 8 * state.params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(state.params.len() as u32).to_le_bytes());
    for p in &state.params {
        out.extend_from_slice(&(p.value.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(p.value.cols() as u32).to_le_bytes());
        for v in p.value.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes the raw tensors; pair with [`ModelState::from_values`].
pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Vec<DenseMatrix>> {
    let mut cursor = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let end = cursor + n;
        if end > bytes.len() {
            return Err(HhnError::format(
                path,
                format!("truncated checkpoint: need {end} bytes, have {}", bytes.len()),
            ));
        }
        let s = &bytes[cursor..end];
        cursor = end;
        Ok(s)
    };
    if take(4)? != CHECKPOINT_MAGIC {
        return Err(HhnError::format(path, "bad magic, expected \"HHNM\""));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != CHECKPOINT_VERSION {
        return Err(HhnError::format(path, format!("unsupported checkpoint version {version}")));
    }
    let count = u32_at(take(4)?) as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = u32_at(take(4)?) as usize;
        let cols = u32_at(take(4)?) as usize;
        let payload = take(rows * cols * 8)?;
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(DenseMatrix::from_vec(rows, cols, values).map_err(|e| HhnError::format(path, e.to_string()))?);
    }
    if cursor != bytes.len() {
        return Err(HhnError::format(
            path,
            format!("{} trailing bytes after {count} tensors", bytes.len() - cursor),
        ));
    }
    Ok(tensors)
}

pub fn write_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(state)).map_err(|e| HhnError::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Vec<DenseMatrix>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| HhnError::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
