//! Vector fields on the torus stored as full-lattice Fourier coefficients.
//!
//! A field `u(x) = sum_k c_k e^{2 pi i k.x}` keeps one complex `d`-vector per
//! lattice mode. Real-valuedness is the Hermitian symmetry
//! `c(-k) = conj(c(k))`; constructors and transforms enforce it exactly.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{TorusGrid, MAX_DIM};

#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    comps: Vec<Vec<Complex64>>,
    mean_free: bool,
    div_free: bool,
}

/// Seeded random field with a power-law amplitude spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFieldSpec {
    /// Amplitude of mode `k` scales like `|k|^-slope`.
    pub slope: f64,
    /// Modes with `max_j |k_j| <= kmax` are populated; `None` means the dealias cutoff.
    pub kmax: Option<usize>,
    /// Rescale to this L2 norm; `None` leaves the raw amplitude.
    pub l2: Option<f64>,
    pub seed: u64,
}

impl Default for RandomFieldSpec {
    fn default() -> Self {
        Self {
            slope: 2.0,
            kmax: None,
            l2: Some(1.0),
            seed: 0,
        }
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        let comps = vec![vec![Complex64::default(); grid.len()]; grid.dim()];
        Self {
            grid: grid.clone(),
            comps,
            mean_free: true,
            div_free: true,
        }
    }

    /// Builds a field from explicit modes; each `(k, amplitude)` also sets `-k`
    /// to the conjugate amplitude. Later entries override earlier ones.
    pub fn from_modes(grid: &Arc<TorusGrid>, modes: &[(Vec<i64>, Vec<Complex64>)]) -> Result<Self> {
        let mut field = Self::zeros(grid);
        for (k, amp) in modes {
            if amp.len() != grid.dim() {
                return Err(Error::InvalidParameter(format!(
                    "mode {k:?} has {} components, grid dimension is {}",
                    amp.len(),
                    grid.dim()
                )));
            }
            let idx = grid
                .index_of(k)
                .ok_or_else(|| Error::InvalidParameter(format!("mode {k:?} outside lattice")))?;
            let cidx = grid.conj_index(idx);
            for (c, &a) in amp.iter().enumerate() {
                if idx == cidx {
                    field.comps[c][idx] = Complex64::new(a.re, 0.0);
                } else {
                    field.comps[c][idx] = a;
                    field.comps[c][cidx] = a.conj();
                }
            }
        }
        field.refresh_flags();
        Ok(field)
    }

    /// Forward transform of real collocation values, one slice per component.
    pub fn from_physical(grid: &Arc<TorusGrid>, values: &[Vec<f64>]) -> Result<Self> {
        if values.len() != grid.dim() || values.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::InvalidParameter(format!(
                "expected {} components of {} values",
                grid.dim(),
                grid.len()
            )));
        }
        let slices: Vec<&[f64]> = values.iter().map(Vec::as_slice).collect();
        let comps = analyze(grid, &slices);
        let mut field = Self {
            grid: grid.clone(),
            comps,
            mean_free: false,
            div_free: false,
        };
        field.refresh_flags();
        Ok(field)
    }

    /// 2D or 3D Taylor-Green vortex scaled by `amplitude`:
    /// `(sin 2πx cos 2πy, -cos 2πx sin 2πy)` in 2D, with a `cos 2πz` factor and
    /// zero third component in 3D.
    pub fn taylor_green(grid: &Arc<TorusGrid>, amplitude: f64) -> Result<Self> {
        let q = Complex64::new(0.0, -0.25 * amplitude);
        let modes = match grid.dim() {
            2 => vec![
                (vec![1, 1], vec![q, -q]),
                (vec![1, -1], vec![q, q]),
            ],
            3 => {
                let h = q * 0.5;
                let z = Complex64::default();
                vec![
                    (vec![1, 1, 1], vec![h, -h, z]),
                    (vec![1, 1, -1], vec![h, -h, z]),
                    (vec![1, -1, 1], vec![h, h, z]),
                    (vec![1, -1, -1], vec![h, h, z]),
                ]
            }
            d => {
                return Err(Error::InvalidParameter(format!(
                    "taylor_green is defined for d = 2, 3, not {d}"
                )))
            }
        };
        Self::from_modes(grid, &modes)
    }

    /// Draws a mean-free, divergence-free, dealiased random field.
    pub fn random(grid: &Arc<TorusGrid>, spec: &RandomFieldSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let kmax = spec.kmax.unwrap_or(grid.dealias_cutoff()).min(grid.dealias_cutoff());
        let mut field = Self::zeros(grid);
        for idx in 0..grid.len() {
            let cidx = grid.conj_index(idx);
            if idx == TorusGrid::MEAN_INDEX || cidx <= idx || !grid.is_retained(idx) {
                continue;
            }
            if grid.max_abs_component(idx) > kmax {
                continue;
            }
            let amp = grid.k_squared(idx).powf(-0.5 * spec.slope);
            for comp in field.comps.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let c = Complex64::new(re, im) * amp;
                comp[idx] = c;
                comp[cidx] = c.conj();
            }
        }
        let mut field = crate::spectral::leray_project(&field);
        if let Some(target) = spec.l2 {
            let norm = field.l2_norm();
            if norm > 0.0 {
                field = field.scale(target / norm);
            }
        }
        field
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Coefficients of one component in lattice order.
    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    /// Coefficient vector at a wavenumber; zero outside the lattice.
    pub fn mode(&self, k: &[i64]) -> Vec<Complex64> {
        match self.grid.index_of(k) {
            Some(idx) => self.comps.iter().map(|c| c[idx]).collect(),
            None => vec![Complex64::default(); self.dim()],
        }
    }

    pub fn is_mean_free(&self) -> bool {
        self.mean_free
    }

    pub fn is_div_free(&self) -> bool {
        self.div_free
    }

    pub(crate) fn from_parts(
        grid: Arc<TorusGrid>,
        comps: Vec<Vec<Complex64>>,
        mean_free: bool,
        div_free: bool,
    ) -> Self {
        debug_assert_eq!(comps.len(), grid.dim());
        Self {
            grid,
            comps,
            mean_free,
            div_free,
        }
    }

    pub(crate) fn into_parts(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    pub(crate) fn set_flags(&mut self, mean_free: bool, div_free: bool) {
        self.mean_free = mean_free;
        self.div_free = div_free;
    }

    /// Recomputes both flags from the coefficients.
    pub fn refresh_flags(&mut self) {
        self.mean_free = self.comps.iter().all(|c| c[TorusGrid::MEAN_INDEX] == Complex64::default());
        let norm = self.l2_norm();
        self.div_free = self.mean_free && self.divergence_defect() <= 1e-12 * norm;
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: format!("d={} n={}", self.grid.dim(), self.grid.n()),
                right: format!("d={} n={}", other.grid.dim(), other.grid.n()),
            })
        }
    }

    /// Parseval L2 norm (the domain has unit volume).
    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `|c(-k) - conj(c(k))|` over the lattice.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in &self.comps {
            for idx in 0..self.grid.len() {
                let d = comp[self.grid.conj_index(idx)] - comp[idx].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest `|k . c(k)|` over the lattice, integer wavenumbers.
    pub fn divergence_defect(&self) -> f64 {
        let mut k = [0i64; MAX_DIM];
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.len() {
            self.grid.wavenumber_into(idx, &mut k);
            let mut dot = Complex64::default();
            for (j, comp) in self.comps.iter().enumerate() {
                dot += comp[idx] * k[j] as f64;
            }
            worst = worst.max(dot.norm());
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `max_j |k_j|` carrying a nonzero coefficient.
    pub fn band_limit(&self) -> usize {
        (0..self.grid.len())
            .filter(|&idx| self.comps.iter().any(|c| c[idx] != Complex64::default()))
            .map(|idx| self.grid.max_abs_component(idx))
            .max()
            .unwrap_or(0)
    }

    /// Real collocation values, one vector per component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        let slices: Vec<&[Complex64]> = self.comps.iter().map(Vec::as_slice).collect();
        synthesize(&self.grid, &slices)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().map(|z| z * factor).collect())
            .collect();
        Self::from_parts(self.grid.clone(), comps, self.mean_free, self.div_free)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Self {
        assert!(
            *self.grid == *other.grid,
            "axpy on fields from different grids"
        );
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y * factor).collect())
            .collect();
        Self::from_parts(
            self.grid.clone(),
            comps,
            self.mean_free && other.mean_free,
            self.div_free && other.div_free,
        )
    }

    /// Copies the modes shared with `target` (Nyquist planes excluded) onto it.
    pub fn resample(&self, target: &Arc<TorusGrid>) -> Result<Self> {
        if target.dim() != self.dim() {
            return Err(Error::GridMismatch {
                left: format!("d={}", self.dim()),
                right: format!("d={}", target.dim()),
            });
        }
        let limit = (self.grid.n().min(target.n()) / 2) as i64;
        let mut out = Self::zeros(target);
        let mut k = [0i64; MAX_DIM];
        for idx in 0..self.grid.len() {
            self.grid.wavenumber_into(idx, &mut k);
            if k[..self.dim()].iter().any(|kj| kj.abs() >= limit) {
                continue;
            }
            let tidx = target.index_of(&k[..self.dim()]).expect("shared mode");
            for (dst, src) in out.comps.iter_mut().zip(&self.comps) {
                dst[tidx] = src[idx];
            }
        }
        out.set_flags(self.mean_free, self.div_free);
        Ok(out)
    }

    /// Breaks Hermitian symmetry at the first nonzero retained mode. Verification hook.
    #[doc(hidden)]
    pub fn corrupt_reality(&mut self) {
        let idx = (1..self.grid.len())
            .find(|&i| self.grid.is_retained(i))
            .expect("grid has nonzero retained modes");
        self.comps[0][idx] += Complex64::new(1e-3, 0.0);
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

/// Inverse transform of Hermitian spectra to real grids, two per complex FFT.
pub(crate) fn synthesize(grid: &TorusGrid, spectra: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(spectra.len());
    let i = Complex64::new(0.0, 1.0);
    for pair in spectra.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(x, y)| x + i * y).collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        grid.fft(&mut buf, false);
        out.push(buf.iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(buf.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Forward transform of real grids to exactly Hermitian spectra.
pub(crate) fn analyze(grid: &TorusGrid, values: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let inv_len = 1.0 / grid.len() as f64;
    let mut out = Vec::with_capacity(values.len());
    for pair in values.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        grid.fft(&mut buf, true);
        let mut first = vec![Complex64::default(); grid.len()];
        let mut second = vec![Complex64::default(); grid.len()];
        for idx in 0..grid.len() {
            let z = buf[idx] * inv_len;
            let zc = buf[grid.conj_index(idx)].conj() * inv_len;
            first[idx] = (z + zc) * 0.5;
            second[idx] = Complex64::new(0.0, -0.5) * (z - zc);
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}

/// `2π|k|` for a lattice mode.
#[inline]
pub(crate) fn physical_wavenumber(grid: &TorusGrid, idx: usize) -> f64 {
    2.0 * PI * grid.k_squared(idx).sqrt()
}
