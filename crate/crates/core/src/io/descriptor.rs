//! Binary descriptor file: a fixed header followed by a row-major
//! frame-by-dimension matrix of little-endian f32, one unit-norm row per
//! frame.
//!
//! Header layout (28 bytes):
//! - magic: 8 bytes `TOPODESC`
//! - version: u32 LE
//! - frame_count: u64 LE
//! - dim: u32 LE
//! - dtype: u32 LE (0 = f32 little-endian)

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TOPODESC";
pub const VERSION: u32 = 1;
pub const DTYPE_F32_LE: u32 = 0;
/// Tolerance on the unit-norm invariant of stored rows.
pub const ROW_NORM_TOL: f64 = 1e-5;

fn check_row_norm(row: &[f32], index: usize) -> Result<()> {
    let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > ROW_NORM_TOL {
        return Err(Error::Format(format!(
            "descriptor row {index} has norm {norm}, expected 1 within {ROW_NORM_TOL}"
        )));
    }
    Ok(())
}

/// Serializes descriptor rows. Every row must be unit-norm and of equal
/// dimension.
pub fn write_descriptors(rows: &[Vec<f32>]) -> Result<Vec<u8>> {
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut out = Vec::with_capacity(28 + rows.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&DTYPE_F32_LE.to_le_bytes());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Format(format!(
                "descriptor row {i} has dimension {}, expected {dim}",
                row.len()
            )));
        }
        check_row_norm(row, i)?;
        for &v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parses a descriptor file, validating the header, payload length, and the
/// unit-norm invariant of every row.
pub fn read_descriptors(bytes: &[u8]) -> Result<Vec<Vec<f32>>> {
    if bytes.len() < 28 {
        return Err(Error::Format("descriptor file shorter than its header".into()));
    }
    if &bytes[0..8] != MAGIC {
        return Err(Error::Format("bad descriptor magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported descriptor version {version}"
        )));
    }
    let frame_count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    let dtype = u32::from_le_bytes(bytes[24..28].try_into().unwrap());
    if dtype != DTYPE_F32_LE {
        return Err(Error::Format(format!("unsupported descriptor dtype {dtype}")));
    }
    let expected = 28 + frame_count * dim * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "descriptor payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut rows = Vec::with_capacity(frame_count);
    let mut off = 28;
    for i in 0..frame_count {
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            row.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        check_row_norm(&row, i)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn save_descriptors(path: &Path, rows: &[Vec<f32>]) -> Result<()> {
    Ok(std::fs::write(path, write_descriptors(rows)?)?)
}

pub fn load_descriptors(path: &Path) -> Result<Vec<Vec<f32>>> {
    read_descriptors(&std::fs::read(path)?)
}
