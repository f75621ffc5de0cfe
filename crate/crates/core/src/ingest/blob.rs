//! "HHNF" v1 feature blobs: magic, LE u32 version/rows/cols, then row-major LE f32.

use std::fs;
use std::path::Path;

use crate::error::{HhnError, Result};
use crate::kernel::DenseMatrix;

pub const BLOB_MAGIC: &[u8; 4] = b"HHNF";
pub const BLOB_VERSION: u32 = 1;
pub const BLOB_HEADER_LEN: usize = 16;

pub fn encode_blob(matrix: &DenseMatrix) -> Result<Vec<u8>> {
    if matrix.rows() == 0 || matrix.cols() == 0 {
        return Err(HhnError::Validation(format!(
            "feature blob needs at least one row and column, got {:?}",
            matrix.shape()
        )));
    }
    let rows = u32::try_from(matrix.rows())
        .map_err(|_| HhnError::Validation("too many rows for HHNF".into()))?;
    let cols = u32::try_from(matrix.cols())
        .map_err(|_| HhnError::Validation("too many columns for HHNF".into()))?;
    let mut out = Vec::with_capacity(BLOB_HEADER_LEN + 4 * matrix.values().len());
    out.extend_from_slice(BLOB_MAGIC);
    out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for &v in matrix.values() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(HhnError::NonFinite(format!(
                "value {v} does not fit in f32"
            )));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_blob(bytes: &[u8], path: &Path) -> Result<DenseMatrix> {
    if bytes.len() < BLOB_HEADER_LEN {
        return Err(HhnError::format(
            path,
            format!(
                "header truncated: expected {BLOB_HEADER_LEN} bytes, got {}",
                bytes.len()
            ),
        ));
    }
    if &bytes[0..4] != BLOB_MAGIC {
        return Err(HhnError::format(
            path,
            format!("bad magic {:?}, expected \"HHNF\"", String::from_utf8_lossy(&bytes[0..4])),
        ));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != BLOB_VERSION {
        return Err(HhnError::format(path, format!("unsupported version {version}")));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = rows * cols * 4;
    let payload = &bytes[BLOB_HEADER_LEN..];
    if payload.len() != expected {
        return Err(HhnError::format(
            path,
            format!(
                "payload length mismatch: expected {expected} bytes for {rows}x{cols}, got {}",
                payload.len()
            ),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DenseMatrix::from_vec(rows, cols, values).map_err(|e| HhnError::format(path, e.to_string()))
}

pub fn write_feature_blob(matrix: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_blob(matrix)?;
    fs::write(path, bytes).map_err(|e| HhnError::io(path, e))
}

pub fn read_feature_blob(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| HhnError::io(path, e))?;
    decode_blob(&bytes, path)
}
