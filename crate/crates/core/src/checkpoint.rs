//! Binary checkpoint files for spectral fields.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `FRDACKP1`                         |
//! | 8      | 4    | `u32` dimension `d`                      |
//! | 12     | 4    | `u32` modes per axis `n`                 |
//! | 16     | 8    | `f64` alpha tag                          |
//! | 24     | 8    | `f64` time                               |
//! | 32     | 8    | `u64` step index                         |
//! | 40     | 1    | flags: bit 0 mean-free, bit 1 div-free   |
//! | 41     | ...  | coefficients                              |
//!
//! Coefficients follow in row-major lattice order (flat index `0..n^d`, last
//! axis fastest, FFT wavenumber order per axis). Each mode stores its `d`
//! components, each as `re` then `im`, `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

pub const MAGIC: &[u8; 8] = b"FRDACKP1";
const HEADER_LEN: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub dim: usize,
    pub n: usize,
    pub alpha: f64,
    pub t: f64,
    pub step: u64,
}

pub fn encode(field: &SpectralField, alpha: f64, t: f64, step: u64) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * grid.dim() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&alpha.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&step.to_le_bytes());
    out.push(field.is_mean_free() as u8 | (field.is_div_free() as u8) << 1);
    for idx in 0..grid.len() {
        for comp in field.components() {
            out.extend_from_slice(&comp[idx].re.to_le_bytes());
            out.extend_from_slice(&comp[idx].im.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(CheckpointHeader, SpectralField)> {
    let bad = |reason: &str| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = CheckpointHeader {
        dim: u32_at(8),
        n: u32_at(12),
        alpha: f64_at(16),
        t: f64_at(24),
        step: u64::from_le_bytes(bytes[32..40].try_into().unwrap()),
    };
    let flags = bytes[40];
    let grid: Arc<TorusGrid> = TorusGrid::new(header.dim, header.n).map_err(|e| bad(&e.to_string()))?;
    let expected = HEADER_LEN + grid.len() * grid.dim() * 16;
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut comps = vec![vec![Complex64::default(); grid.len()]; grid.dim()];
    let mut offset = HEADER_LEN;
    for idx in 0..grid.len() {
        for comp in comps.iter_mut() {
            comp[idx] = Complex64::new(f64_at(offset), f64_at(offset + 8));
            offset += 16;
        }
    }
    let field = SpectralField::from_parts(grid, comps, flags & 1 != 0, flags & 2 != 0);
    if !field.is_finite() {
        return Err(bad("non-finite coefficient"));
    }
    if field.reality_defect() > 1e-12 * field.l2_norm().max(f64::MIN_POSITIVE) {
        return Err(bad("coefficients violate the reality symmetry"));
    }
    Ok((header, field))
}

pub fn write(path: &Path, field: &SpectralField, alpha: f64, t: f64, step: u64) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode(field, alpha, t, step))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(CheckpointHeader, SpectralField)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes, path)
}

/// Reads a checkpoint and rebinds it to an existing grid of the same shape.
pub fn read_on(path: &Path, grid: &Arc<TorusGrid>) -> Result<(CheckpointHeader, SpectralField)> {
    let (header, field) = read(path)?;
    if header.dim != grid.dim() || header.n != grid.n() {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!("grid d={} n={} does not match d={} n={}", header.dim, header.n, grid.dim(), grid.n()),
        });
    }
    let comps = field.components().to_vec();
    Ok((
        header,
        SpectralField::from_parts(grid.clone(), comps, field.is_mean_free(), field.is_div_free()),
    ))
}
