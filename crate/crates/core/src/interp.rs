//! Linear observation operators `I_h` and an empirical estimate of their
//! approximation constant.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::spectral::sobolev_norm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InterpolantRepr", into = "InterpolantRepr")]
pub enum InterpolantSpec {
    /// Keeps modes with `max_j |k_j| <= cutoff`; `h = 1/cutoff`.
    ModalProjection { cutoff: usize },
    /// Replaces the field by its mean over `cells^d` equal boxes; `h = 1/cells`.
    VolumeAverage { cells: usize },
}

/// Flat `kind = "modal" | "volume_average"`, `param = N` form used in config files.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpolantRepr {
    kind: InterpolantKind,
    param: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InterpolantKind {
    Modal,
    VolumeAverage,
}

impl TryFrom<InterpolantRepr> for InterpolantSpec {
    type Error = String;

    fn try_from(r: InterpolantRepr) -> std::result::Result<Self, String> {
        if r.param == 0 {
            return Err("interpolant param must be positive".into());
        }
        Ok(match r.kind {
            InterpolantKind::Modal => Self::ModalProjection { cutoff: r.param },
            InterpolantKind::VolumeAverage => Self::VolumeAverage { cells: r.param },
        })
    }
}

impl From<InterpolantSpec> for InterpolantRepr {
    fn from(s: InterpolantSpec) -> Self {
        match s {
            InterpolantSpec::ModalProjection { cutoff } => Self { kind: InterpolantKind::Modal, param: cutoff },
            InterpolantSpec::VolumeAverage { cells } => Self { kind: InterpolantKind::VolumeAverage, param: cells },
        }
    }
}

impl fmt::Display for InterpolantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ModalProjection { cutoff } => write!(f, "modal:{cutoff}"),
            Self::VolumeAverage { cells } => write!(f, "volume_average:{cells}"),
        }
    }
}

impl InterpolantSpec {
    pub fn h(&self) -> f64 {
        match *self {
            Self::ModalProjection { cutoff } => 1.0 / cutoff as f64,
            Self::VolumeAverage { cells } => 1.0 / cells as f64,
        }
    }

    /// Integer parameter: modal cutoff or cells per axis.
    pub fn param(&self) -> usize {
        match *self {
            Self::ModalProjection { cutoff } => cutoff,
            Self::VolumeAverage { cells } => cells,
        }
    }

    pub fn with_param(&self, param: usize) -> Self {
        match self {
            Self::ModalProjection { .. } => Self::ModalProjection { cutoff: param },
            Self::VolumeAverage { .. } => Self::VolumeAverage { cells: param },
        }
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        match *self {
            Self::ModalProjection { cutoff } => {
                if cutoff == 0 || cutoff > grid.dealias_cutoff() {
                    return Err(Error::InvalidInterpolant(format!(
                        "modal cutoff {cutoff} must lie in 1..={} (n/3 for n={})",
                        grid.dealias_cutoff(),
                        grid.n()
                    )));
                }
            }
            Self::VolumeAverage { cells } => {
                if cells == 0 || !grid.n().is_multiple_of(cells) {
                    return Err(Error::InvalidInterpolant(format!(
                        "{cells} cells per axis does not divide n={}",
                        grid.n()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether the operator is a Fourier multiplier (commutes with `A^s` and `P_σ`).
    pub fn is_modal(&self) -> bool {
        matches!(self, Self::ModalProjection { .. })
    }
}

/// Applies `I_h` to a field. No Leray projection is applied here.
pub fn apply_interpolant(spec: &InterpolantSpec, field: &SpectralField) -> Result<SpectralField> {
    let grid = field.grid();
    spec.validate(grid)?;
    match *spec {
        InterpolantSpec::ModalProjection { cutoff } => {
            let comps = field
                .components()
                .iter()
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .map(|(idx, &z)| {
                            if grid.max_abs_component(idx) <= cutoff {
                                z
                            } else {
                                Complex64::default()
                            }
                        })
                        .collect()
                })
                .collect();
            Ok(SpectralField::from_parts(
                grid.clone(),
                comps,
                field.is_mean_free(),
                field.is_div_free(),
            ))
        }
        InterpolantSpec::VolumeAverage { cells } => {
            let n = grid.n();
            let dim = grid.dim();
            let width = n / cells;
            let cell_count = cells.pow(dim as u32);
            let phys = field.to_physical();
            // collocation point -> owning cell
            let owner: Vec<usize> = (0..grid.len())
                .map(|p| {
                    let mut rem = p;
                    let mut cell = 0;
                    let mut stride = 1;
                    for _ in 0..dim {
                        cell += ((rem % n) / width) * stride;
                        rem /= n;
                        stride *= cells;
                    }
                    cell
                })
                .collect();
            let per_cell = (width.pow(dim as u32)) as f64;
            let averaged: Vec<Vec<f64>> = phys
                .iter()
                .map(|values| {
                    let mut sums = vec![0.0; cell_count];
                    for (p, &v) in values.iter().enumerate() {
                        sums[owner[p]] += v;
                    }
                    owner.iter().map(|&c| sums[c] / per_cell).collect()
                })
                .collect();
            let mut out = SpectralField::from_physical(grid, &averaged)?;
            let mean_free = field.is_mean_free();
            if mean_free {
                let mut comps = out.into_parts();
                for c in comps.iter_mut() {
                    c[TorusGrid::MEAN_INDEX] = Complex64::default();
                }
                out = SpectralField::from_parts(grid.clone(), comps, true, false);
            } else {
                out.set_flags(false, false);
            }
            Ok(out)
        }
    }
}

/// Largest observed `‖I_h f - f‖²_{V^s} / (h² ‖f‖²_{V^{s+α}})` over a corpus.
/// Fields with a vanishing denominator are skipped.
pub fn measure_interp_constant(
    spec: &InterpolantSpec,
    corpus: &[SpectralField],
    s: f64,
    alpha: f64,
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let h2 = spec.h().powi(2);
    let mut worst: f64 = 0.0;
    for f in corpus {
        let residual = &apply_interpolant(spec, f)? - f;
        let num = sobolev_norm(&residual, s).powi(2);
        let den = h2 * sobolev_norm(f, s + alpha).powi(2);
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::RandomFieldSpec;

    #[test]
    fn modal_projection_cases() {
        let g = TorusGrid::new(2, 16).unwrap();
        let spec = InterpolantSpec::ModalProjection { cutoff: 4 };
        let inside = SpectralField::random(&g, &RandomFieldSpec { kmax: Some(4), seed: 2, ..Default::default() });
        let out = apply_interpolant(&spec, &inside).unwrap();
        assert_eq!(out.components(), inside.components());

        let outside = SpectralField::from_modes(
            &g,
            &[(vec![5, 0], vec![Complex64::default(), Complex64::new(1.0, 0.0)])],
        )
        .unwrap();
        assert_eq!(apply_interpolant(&spec, &outside).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn configuration_errors() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = SpectralField::zeros(&g);
        assert!(apply_interpolant(&InterpolantSpec::ModalProjection { cutoff: 6 }, &f).is_err());
        assert!(apply_interpolant(&InterpolantSpec::VolumeAverage { cells: 3 }, &f).is_err());
        assert!(matches!(
            measure_interp_constant(&InterpolantSpec::ModalProjection { cutoff: 2 }, &[], 0.0, 1.0),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn volume_average_with_one_point_per_cell_is_identity() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = SpectralField::random(&g, &RandomFieldSpec { seed: 5, ..Default::default() });
        let out = apply_interpolant(&InterpolantSpec::VolumeAverage { cells: 16 }, &f).unwrap();
        assert!((&out - &f).l2_norm() < 1e-14);
        assert!(!out.is_div_free());
    }

    #[test]
    fn volume_average_matches_direct_cell_means() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = SpectralField::random(&g, &RandomFieldSpec { seed: 8, ..Default::default() });
        let out = apply_interpolant(&InterpolantSpec::VolumeAverage { cells: 4 }, &f).unwrap();
        let phys = f.to_physical();
        let got = out.to_physical();
        for c in 0..2 {
            for cx in 0..4 {
                for cy in 0..4 {
                    let mut sum = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            sum += phys[c][(cx * 4 + i) * 16 + cy * 4 + j];
                        }
                    }
                    let mean = sum / 16.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            assert!((got[c][(cx * 4 + i) * 16 + cy * 4 + j] - mean).abs() < 1e-13);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn volume_average_error_shrinks_with_more_cells() {
        let g = TorusGrid::new(2, 32).unwrap();
        let f = SpectralField::random(&g, &RandomFieldSpec { seed: 9, ..Default::default() });
        let errs: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&m| {
                let out = apply_interpolant(&InterpolantSpec::VolumeAverage { cells: m }, &f).unwrap();
                (&out - &f).l2_norm()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn single_mode_ratio_closed_form() {
        let g = TorusGrid::new(2, 32).unwrap();
        let cutoff = 4;
        let spec = InterpolantSpec::ModalProjection { cutoff };
        let f = SpectralField::from_modes(
            &g,
            &[(vec![cutoff as i64 + 1, 0], vec![Complex64::default(), Complex64::new(0.3, 0.1)])],
        )
        .unwrap();
        let alpha = 1.25;
        let c = measure_interp_constant(&spec, &[f], 0.0, alpha).unwrap();
        let h = 1.0 / cutoff as f64;
        let want = (2.0 * PI * (cutoff as f64 + 1.0)).powf(-2.0 * alpha) / (h * h);
        assert!((c - want).abs() <= 1e-12 * want);
    }
}
