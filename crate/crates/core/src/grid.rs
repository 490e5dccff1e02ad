//! Periodic lattice on the unit torus `T^d = R^d / Z^d`.
//!
//! Modes are stored in FFT order along every axis: index `i` carries the
//! integer wavenumber `i` for `i <= n/2` and `i - n` otherwise, so the
//! lattice per axis is `{-n/2+1, ..., n/2}`. Multi-indices are flattened
//! row-major with the last axis contiguous.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest dimension the index arithmetic supports.
pub const MAX_DIM: usize = 8;

pub struct TorusGrid {
    dim: usize,
    n: usize,
    len: usize,
    dealias: Vec<bool>,
    k2: Vec<f64>,
    kvec: Vec<i32>,
    kmax_abs: Vec<u32>,
    conj_index: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl TorusGrid {
    /// Builds a grid with `n` collocation points per axis in `dim` dimensions.
    pub fn new(dim: usize, n: usize) -> Result<Arc<Self>> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} outside 2..={MAX_DIM}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "modes per axis must be even and >= 8, got {n}"
            )));
        }
        let len = n
            .checked_pow(dim as u32)
            .filter(|&l| l <= 1 << 28)
            .ok_or_else(|| Error::InvalidGrid(format!("{n}^{dim} lattice too large")))?;

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let mut dealias = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        let mut conj_index = Vec::with_capacity(len);
        let mut kvec = Vec::with_capacity(len * dim);
        let mut kmax_abs = Vec::with_capacity(len);
        let mut k = [0i64; MAX_DIM];
        for idx in 0..len {
            unflatten(idx, n, dim, &mut k);
            let mut keep = true;
            let mut sq = 0i64;
            let mut cidx = 0usize;
            for &kj in &k[..dim] {
                keep &= 3 * (kj.unsigned_abs() as usize) < n;
                sq += kj * kj;
                cidx = cidx * n + (-kj).rem_euclid(n as i64) as usize;
            }
            dealias.push(keep);
            k2.push(sq as f64);
            kvec.extend(k[..dim].iter().map(|&kj| kj as i32));
            kmax_abs.push(k[..dim].iter().map(|kj| kj.unsigned_abs() as u32).max().unwrap_or(0));
            conj_index.push(cidx);
        }

        Ok(Arc::new(Self {
            dim,
            n,
            len,
            dealias,
            k2,
            kvec,
            kmax_abs,
            conj_index,
            forward,
            inverse,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of lattice modes, equal to the number of collocation points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Largest retained `|k_j|` under the 2/3 rule. Retained modes satisfy
    /// `3|k_j| < n`, which keeps quadratic products alias-free also when `3 | n`.
    pub fn dealias_cutoff(&self) -> usize {
        (self.n - 1) / 3
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        self.dealias[idx]
    }

    /// Squared integer wavenumber magnitude `|k|^2`.
    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    /// Flat index of the mode `-k`.
    #[inline]
    pub fn conj_index(&self, idx: usize) -> usize {
        self.conj_index[idx]
    }

    /// Integer wavenumber of a flat index.
    pub fn wavenumber(&self, idx: usize) -> Vec<i64> {
        let mut k = [0i64; MAX_DIM];
        unflatten(idx, self.n, self.dim, &mut k);
        k[..self.dim].to_vec()
    }

    /// Writes the wavenumber of `idx` into `out[..dim]`.
    #[inline]
    pub fn wavenumber_into(&self, idx: usize, out: &mut [i64; MAX_DIM]) {
        for (o, &k) in out.iter_mut().zip(self.k_slice(idx)) {
            *o = k as i64;
        }
    }

    /// Wavenumber components of `idx`.
    #[inline]
    pub fn k_slice(&self, idx: usize) -> &[i32] {
        &self.kvec[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Flat index of a wavenumber, or `None` when outside the lattice.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut idx = 0usize;
        for &kj in k {
            if kj <= -half || kj > half {
                return None;
            }
            idx = idx * self.n + kj.rem_euclid(self.n as i64) as usize;
        }
        Some(idx)
    }

    /// The mean mode `k = 0` always sits at flat index zero.
    pub const MEAN_INDEX: usize = 0;

    /// Largest `|k_j|` of a mode.
    #[inline]
    pub fn max_abs_component(&self, idx: usize) -> usize {
        self.kmax_abs[idx] as usize
    }

    /// Physical coordinate of collocation point `idx` (grid spacing `1/n`).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        let mut x = vec![0.0; self.dim];
        for j in (0..self.dim).rev() {
            x[j] = (rem % self.n) as f64 / self.n as f64;
            rem /= self.n;
        }
        x
    }

    /// In-place unnormalized d-dimensional FFT (`forward`: `e^{-2πi k·x}`).
    pub(crate) fn fft(&self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.len);
        let plan = if forward { &self.forward } else { &self.inverse };
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        let mut stride = n;
        for _ in 1..self.dim {
            let block = stride * n;
            for base in (0..self.len).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, &value) in line.iter().enumerate() {
                        data[start + i * stride] = value;
                    }
                }
            }
            stride = block;
        }
    }
}

fn unflatten(mut idx: usize, n: usize, dim: usize, out: &mut [i64; MAX_DIM]) {
    let half = n / 2;
    for j in (0..dim).rev() {
        let i = idx % n;
        idx /= n;
        out[j] = if i <= half { i as i64 } else { i as i64 - n as i64 };
    }
}
