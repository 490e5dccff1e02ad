//! Fractional Stokes calculus on spectral fields: Fourier-multiplier
//! operators, the Leray projector, Sobolev and Lebesgue norms, and the
//! dealiased advection term.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{analyze, physical_wavenumber, synthesize, SpectralField};
use crate::grid::{TorusGrid, MAX_DIM};

/// Symbol `(2π|k|)^{2s}`; the mean mode maps to zero.
#[inline]
pub fn fractional_symbol(grid: &TorusGrid, idx: usize, s: f64) -> f64 {
    if idx == TorusGrid::MEAN_INDEX {
        0.0
    } else {
        (4.0 * PI * PI * grid.k_squared(idx)).powf(s)
    }
}

/// `(-Δ)^s` via its Fourier symbol. The output is always mean-free.
pub fn fractional_laplacian(field: &SpectralField, s: f64) -> Result<SpectralField> {
    let grid = field.grid();
    if s < 0.0 && field.components().iter().any(|c| c[TorusGrid::MEAN_INDEX] != Complex64::default()) {
        return Err(Error::MeanModeSingularity { exponent: s });
    }
    let symbol: Vec<f64> = (0..grid.len()).map(|idx| fractional_symbol(grid, idx, s)).collect();
    let comps = field
        .components()
        .iter()
        .map(|c| c.iter().zip(&symbol).map(|(z, w)| z * w).collect())
        .collect();
    Ok(SpectralField::from_parts(grid.clone(), comps, true, field.is_div_free()))
}

/// Leray-Helmholtz projection: removes the `k`-parallel part of every mode.
/// The mean mode is left untouched.
pub fn leray_project(field: &SpectralField) -> SpectralField {
    let grid = field.grid();
    let dim = grid.dim();
    let mut comps: Vec<Vec<Complex64>> = field.components().to_vec();
    let mut k = [0i64; MAX_DIM];
    for idx in 1..grid.len() {
        grid.wavenumber_into(idx, &mut k);
        let mut dot = Complex64::default();
        for j in 0..dim {
            dot += comps[j][idx] * k[j] as f64;
        }
        if dot == Complex64::default() {
            continue;
        }
        let coef = dot / grid.k_squared(idx);
        for j in 0..dim {
            comps[j][idx] -= coef * k[j] as f64;
        }
    }
    SpectralField::from_parts(grid.clone(), comps, field.is_mean_free(), true)
}

/// Zeroes every mode outside the 2/3-rule mask.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let grid = field.grid();
    let comps = field
        .components()
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(idx, &z)| if grid.is_retained(idx) { z } else { Complex64::default() })
                .collect()
        })
        .collect();
    SpectralField::from_parts(grid.clone(), comps, field.is_mean_free(), field.is_div_free())
}

/// Pointwise advection `(a.∇)b` on the collocation grid, transformed back,
/// without dealiasing or projection. Inputs are used as given.
pub(crate) fn advection_raw(a: &SpectralField, b: &SpectralField) -> Vec<Vec<Complex64>> {
    let grid = a.grid();
    let dim = grid.dim();
    let len = grid.len();

    let mut spectra: Vec<Vec<Complex64>> = Vec::with_capacity(dim + dim * dim);
    spectra.extend(a.components().iter().cloned());
    let mut k = [0i64; MAX_DIM];
    for bi in b.components() {
        for j in 0..dim {
            let mut grad = vec![Complex64::default(); len];
            for (idx, g) in grad.iter_mut().enumerate() {
                if bi[idx] == Complex64::default() {
                    continue;
                }
                grid.wavenumber_into(idx, &mut k);
                *g = bi[idx] * Complex64::new(0.0, 2.0 * PI * k[j] as f64);
            }
            spectra.push(grad);
        }
    }
    let refs: Vec<&[Complex64]> = spectra.iter().map(Vec::as_slice).collect();
    let phys = synthesize(grid, &refs);
    let (a_phys, grads) = phys.split_at(dim);

    let mut products = vec![vec![0.0; len]; dim];
    for (i, out) in products.iter_mut().enumerate() {
        for j in 0..dim {
            let g = &grads[i * dim + j];
            let aj = &a_phys[j];
            for p in 0..len {
                out[p] += aj[p] * g[p];
            }
        }
    }
    let refs: Vec<&[f64]> = products.iter().map(Vec::as_slice).collect();
    analyze(grid, &refs)
}

/// `B(a, b) = P_σ((a.∇)b)` restricted to the retained modes.
///
/// Both inputs are truncated to the dealias mask first, so the pointwise
/// product reproduces the exact Galerkin convolution on the retained band.
pub fn nonlinear_term(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.same_grid(b)?;
    let grid = a.grid();
    let comps = advection_raw(&dealias(a), &dealias(b));
    let mut out = SpectralField::from_parts(grid.clone(), comps, false, false);
    out = dealias(&out);
    let mut comps = out.into_parts();
    for c in comps.iter_mut() {
        c[TorusGrid::MEAN_INDEX] = Complex64::default();
    }
    let out = SpectralField::from_parts(grid.clone(), comps, true, false);
    Ok(leray_project(&out))
}

/// Trilinear form `b(a, b, c) = <B(a, b), c>`.
pub fn trilinear(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> Result<f64> {
    inner_product(&nonlinear_term(a, b)?, c)
}

/// `‖u‖_{V^s} = sqrt(sum_k (2π|k|)^{2s} |c_k|^2)` over the full lattice.
/// At `s = 0` the mean mode is included; for `s < 0` a nonzero mean gives infinity.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    let grid = field.grid();
    let mut acc = 0.0;
    for idx in 0..grid.len() {
        let energy: f64 = field.components().iter().map(|c| c[idx].norm_sqr()).sum();
        if idx == TorusGrid::MEAN_INDEX {
            if s == 0.0 {
                acc += energy;
            } else if s < 0.0 && energy > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        if energy > 0.0 {
            acc += physical_wavenumber(grid, idx).powf(2.0 * s) * energy;
        }
    }
    acc.sqrt()
}

/// Lebesgue exponent for [`lp_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lp {
    P(f64),
    Inf,
}

/// `L^p` norm of the Euclidean magnitude `|u(x)|`, by collocation quadrature
/// at the working resolution. Spectrally accurate for band-limited fields.
pub fn lp_norm(field: &SpectralField, p: Lp) -> f64 {
    let phys = field.to_physical();
    lp_norm_physical(&phys, p)
}

pub(crate) fn lp_norm_physical(phys: &[Vec<f64>], p: Lp) -> f64 {
    let len = phys.first().map_or(0, Vec::len);
    if len == 0 {
        return 0.0;
    }
    let magnitude = |i: usize| phys.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
    match p {
        Lp::Inf => (0..len).map(magnitude).fold(0.0, f64::max),
        Lp::P(q) => {
            let mean = (0..len).map(|i| magnitude(i).powf(q)).sum::<f64>() / len as f64;
            mean.powf(1.0 / q)
        }
    }
}

/// `L^2` inner product `sum_i ∫ a_i b_i dx` by Parseval.
pub fn inner_product(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    a.same_grid(b)?;
    let mut acc = 0.0;
    for (ca, cb) in a.components().iter().zip(b.components()) {
        for (x, y) in ca.iter().zip(cb) {
            acc += x.re * y.re + x.im * y.im;
        }
    }
    Ok(acc)
}
