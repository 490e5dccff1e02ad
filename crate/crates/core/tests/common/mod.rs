//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use fracda_core::{SpectralField, TorusGrid};
use num_complex::Complex64;

/// Non-solenoidal dealiased random field (raw Gaussian coefficients).
pub fn rough_field(grid: &Arc<TorusGrid>, seed: u64) -> SpectralField {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let mut modes = Vec::new();
    for idx in 1..grid.len() {
        if !grid.is_retained(idx) || grid.conj_index(idx) < idx {
            continue;
        }
        let amp = (0..grid.dim()).map(|_| Complex64::new(next(), next())).collect();
        modes.push((grid.wavenumber(idx), amp));
    }
    SpectralField::from_modes(grid, &modes).unwrap()
}

/// Direct Galerkin convolution of `(a.∇)b` over retained modes, then projected.
pub fn convolution_oracle(a: &SpectralField, b: &SpectralField) -> Vec<Vec<Complex64>> {
    let grid = a.grid();
    let d = grid.dim();
    let retained: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_retained(i)).collect();
    let mut out = vec![vec![Complex64::default(); grid.len()]; d];
    for &pi in &retained {
        let p = grid.wavenumber(pi);
        for &qi in &retained {
            let q = grid.wavenumber(qi);
            let k: Vec<i64> = p.iter().zip(&q).map(|(x, y)| x + y).collect();
            let Some(ki) = grid.index_of(&k) else { continue };
            if !grid.is_retained(ki) || ki == 0 {
                continue;
            }
            let adotq: Complex64 = (0..d)
                .map(|j| a.component(j)[pi] * Complex64::new(0.0, 2.0 * PI * q[j] as f64))
                .sum();
            for i in 0..d {
                out[i][ki] += adotq * b.component(i)[qi];
            }
        }
    }
    for ki in 1..grid.len() {
        let k = grid.wavenumber(ki);
        let k2: f64 = k.iter().map(|x| (x * x) as f64).sum();
        let dot: Complex64 = (0..d).map(|j| out[j][ki] * k[j] as f64).sum();
        for j in 0..d {
            out[j][ki] -= dot * (k[j] as f64 / k2);
        }
    }
    out
}

pub fn relative_diff(got: &SpectralField, want: &[Vec<Complex64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (g, w) in got.components().iter().zip(want) {
        for (x, y) in g.iter().zip(w) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    (num / den).sqrt()
}

/// Relative difference of two fields on the same grid.
pub fn relative_field_diff(got: &SpectralField, want: &SpectralField) -> f64 {
    relative_diff(got, want.components())
}
