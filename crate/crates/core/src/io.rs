//! Binary field files.
//!
//! Layout (little-endian): `b"HARTF1"`, `u32` dimension (always 3), `u32 n`,
//! `f64 L`, 16 reserved zero bytes, then `n^3` pairs `(re, im)` of `f64`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Field, GridSpec, GRID_DIM};

pub const MAGIC: &[u8; 6] = b"HARTF1";
const HEADER_LEN: usize = 6 + 4 + 4 + 8 + 16;

pub fn encode_field(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&GRID_DIM.to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_length().to_le_bytes());
    out.extend_from_slice(&[0u8; 16]);
    for z in field.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.len() < 6 || &bytes[..6] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload { path: path.to_path_buf(), expected: HEADER_LEN, found: bytes.len() });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let dim = u32_at(6);
    if dim != GRID_DIM {
        return Err(Error::InvalidGrid(format!("field file dimension {dim}, expected {GRID_DIM}")));
    }
    let grid = GridSpec::new(u32_at(10) as usize, f64_at(14))?;
    let payload = &bytes[HEADER_LEN..];
    let expected = 16 * grid.len();
    if payload.len() != expected {
        return Err(Error::TruncatedPayload { path: path.to_path_buf(), expected, found: payload.len() });
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap()))
        })
        .collect();
    Field::new(grid, values)
}

/// Loads a field and requires it to live on `grid`.
pub fn load_field_on(path: impl AsRef<Path>, grid: &GridSpec) -> Result<Field> {
    let field = load_field(path)?;
    grid.ensure_same(field.grid())?;
    Ok(field)
}
