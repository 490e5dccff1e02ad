//! Run configuration files (TOML).
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! dim = 2
//! n = 64
//!
//! [phys]
//! nu = 1e-4
//! alpha = 1.25
//! mu = 10.0
//!
//! [interpolant]
//! kind = "modal"          # or "volume_average"
//! param = 12              # modal cutoff N_c, or cells per axis
//!
//! [forcing]
//! kind = "modes"
//! modes = [{ k = [0, 4], amplitude = [[0.0, -0.5], [0.0, 0.0]] }]
//!
//! [initial.u]
//! kind = "random"
//! slope = 1.0
//! kmax = 8
//! l2 = 0.5
//!
//! [initial.v]
//! kind = "zero"
//!
//! [spinup]
//! duration = 20.0
//!
//! [stepper]
//! dt = 0.002
//! t_end = 6.0
//! record_every = 10
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RandomFieldSpec, SpectralField};
use crate::grid::TorusGrid;
use crate::integrator::{Scheme, StepperConfig};
use crate::interp::InterpolantSpec;
use crate::params::{is_admissible, PhysParams};
use crate::spectral::leray_project;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub phys: PhysConfig,
    pub interpolant: InterpolantSpec,
    #[serde(default)]
    pub forcing: FieldConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub spinup: SpinupConfig,
    pub stepper: StepperSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub report: ReportConfig,
    /// Accept `α < d/4 + 1/2` with a warning instead of an error.
    #[serde(default)]
    pub allow_inadmissible: bool,
    /// Parameter axes for `sweep`; the run uses the cartesian product.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysConfig {
    pub nu: f64,
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub u: FieldConfig,
    pub v: FieldConfig,
}

/// Field preset. Everything except `copy_reference` is Leray-projected and
/// made mean-free after construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    #[default]
    Zero,
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Random {
        #[serde(default = "two")]
        slope: f64,
        #[serde(default)]
        kmax: Option<usize>,
        #[serde(default = "some_one")]
        l2: Option<f64>,
        /// Defaults to the run seed plus a per-slot offset.
        #[serde(default)]
        seed: Option<u64>,
    },
    /// `v0 = u` after spin-up.
    CopyReference,
    Modes {
        modes: Vec<ModeConfig>,
    },
}

/// One Fourier mode; the conjugate mode is filled in automatically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k: Vec<i64>,
    /// `[re, im]` per component.
    pub amplitude: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinupConfig {
    #[serde(default)]
    pub duration: f64,
    /// Defaults to the stepper `dt`.
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    /// Zero disables intermediate checkpoints.
    #[serde(default)]
    pub checkpoint_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub checkpoints: bool,
    #[serde(default = "yes")]
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            checkpoints: true,
            plot: true,
        }
    }
}

/// `c0 = "measured"` estimates the interpolant constant on a seeded corpus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum C0Spec {
    Value(f64),
    Keyword(C0Keyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum C0Keyword {
    Measured,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "measured")]
    pub c0: C0Spec,
    /// Stand-in for the unnamed absolute constant in the sufficient conditions.
    #[serde(default = "one")]
    pub constant: f64,
    #[serde(default = "hundred")]
    pub corpus_size: usize,
    #[serde(default = "one")]
    pub corpus_slope: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            c0: measured(),
            constant: 1.0,
            corpus_size: 100,
            corpus_slope: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn some_one() -> Option<f64> {
    Some(1.0)
}
fn one_usize() -> usize {
    1
}
fn hundred() -> usize {
    100
}
fn yes() -> bool {
    true
}
fn measured() -> C0Spec {
    C0Spec::Keyword(C0Keyword::Measured)
}

/// Seed offsets so that unseeded random presets differ between slots.
const SEED_U: u64 = 1;
const SEED_V: u64 = 2;
const SEED_F: u64 = 3;

/// Fields built from a config on a particular grid.
#[derive(Clone, Debug)]
pub struct InitialFields {
    pub u0: SpectralField,
    /// `None` for `copy_reference`.
    pub v0: Option<SpectralField>,
    pub f: SpectralField,
}

/// Names accepted by [`RunConfig::set_param`].
pub const SWEEP_PARAMS: [&str; 10] = ["mu", "nu", "alpha", "n", "param", "dt", "t_end", "seed", "spinup", "constant"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config file. `strict` turns the inadmissibility
    /// warning into an error regardless of `allow_inadmissible`.
    pub fn load(path: &Path, strict: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_toml(&text)?;
        cfg.validate(strict)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn phys_params(&self) -> PhysParams {
        PhysParams {
            nu: self.phys.nu,
            alpha: self.phys.alpha,
            mu: self.phys.mu,
            interp: self.interpolant,
        }
    }

    pub fn stepper_config(&self) -> StepperConfig {
        StepperConfig {
            dt: self.stepper.dt,
            scheme: self.stepper.scheme,
            t_end: self.stepper.t_end,
            checkpoint_every: self.stepper.checkpoint_every,
            record_every: self.stepper.record_every,
        }
    }

    pub fn spinup_dt(&self) -> f64 {
        self.spinup.dt.unwrap_or(self.stepper.dt)
    }

    pub fn make_grid(&self) -> Result<Arc<TorusGrid>> {
        TorusGrid::new(self.grid.dim, self.grid.n)
    }

    pub fn is_admissible(&self) -> bool {
        is_admissible(self.phys.alpha, self.grid.dim)
    }

    /// Load-time checks: grid, physical constants, admissibility,
    /// interpolant range (`N_c <= n/3`), `μ dt <= 0.5`, field presets.
    pub fn validate(&self, strict: bool) -> Result<()> {
        let grid = self.make_grid()?;
        let p = self.phys_params();
        p.validate()?;
        if !self.is_admissible() {
            let msg = format!(
                "alpha = {} is below the admissible bound d/4 + 1/2 = {} for d = {}",
                self.phys.alpha,
                self.grid.dim as f64 / 4.0 + 0.5,
                self.grid.dim
            );
            if strict || !self.allow_inadmissible {
                return Err(Error::Inadmissible(msg));
            }
            eprintln!("warning: {msg}; continuing because allow_inadmissible is set");
        }
        self.interpolant.validate(&grid)?;
        self.stepper_config().validate(&p)?;
        if !(self.spinup.duration >= 0.0 && self.spinup.duration.is_finite()) {
            return Err(Error::Config("spinup duration must be finite and >= 0".into()));
        }
        if self.spinup.duration > 0.0 {
            let dt = self.spinup_dt();
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config("spinup dt must be positive".into()));
            }
        }
        if matches!(self.initial.u, FieldConfig::CopyReference) || matches!(self.forcing, FieldConfig::CopyReference) {
            return Err(Error::Config("copy_reference is only valid for initial.v".into()));
        }
        for fc in [&self.forcing, &self.initial.u, &self.initial.v] {
            fc.check(&grid)?;
        }
        if !(self.report.constant > 0.0) {
            return Err(Error::Config("report.constant must be positive".into()));
        }
        if let C0Spec::Value(c0) = self.report.c0 {
            if !(c0 >= 0.0 && c0.is_finite()) {
                return Err(Error::Config("report.c0 must be finite and >= 0".into()));
            }
        }
        if matches!(self.report.c0, C0Spec::Keyword(_)) && self.report.corpus_size == 0 {
            return Err(Error::Config("report.corpus_size must be positive to measure c0".into()));
        }
        for name in self.sweep.keys() {
            if !SWEEP_PARAMS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown sweep parameter '{name}'")));
            }
        }
        Ok(())
    }

    /// Overrides one scalar parameter, used by sweeps and `--seed`.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{name} needs a non-negative integer, got {v}")))
            }
        };
        match name {
            "mu" => self.phys.mu = value,
            "nu" => self.phys.nu = value,
            "alpha" => self.phys.alpha = value,
            "n" => self.grid.n = as_count(value)?,
            "param" => self.interpolant = self.interpolant.with_param(as_count(value)?),
            "dt" => self.stepper.dt = value,
            "t_end" => self.stepper.t_end = value,
            "seed" => self.seed = as_count(value)? as u64,
            "spinup" => self.spinup.duration = value,
            "constant" => self.report.constant = value,
            other => {
                return Err(Error::Config(format!(
                    "unknown parameter '{other}' (expected one of {})",
                    SWEEP_PARAMS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Builds forcing and initial data on `grid`.
    pub fn build_fields(&self, grid: &Arc<TorusGrid>) -> Result<InitialFields> {
        let u0 = self.initial.u.build(grid, self.seed.wrapping_add(SEED_U))?;
        let v0 = match self.initial.v {
            FieldConfig::CopyReference => None,
            ref fc => Some(fc.build(grid, self.seed.wrapping_add(SEED_V))?),
        };
        let f = self.forcing.build(grid, self.seed.wrapping_add(SEED_F))?;
        Ok(InitialFields { u0, v0, f })
    }
}

impl FieldConfig {
    fn check(&self, grid: &TorusGrid) -> Result<()> {
        match self {
            Self::Modes { modes } => {
                for m in modes {
                    if m.k.len() != grid.dim() || m.amplitude.len() != grid.dim() {
                        return Err(Error::Config(format!(
                            "mode {:?} needs {} wavenumber and amplitude entries",
                            m.k,
                            grid.dim()
                        )));
                    }
                    if grid.index_of(&m.k).is_none() {
                        return Err(Error::Config(format!("mode {:?} is outside the n = {} lattice", m.k, grid.n())));
                    }
                }
            }
            Self::Random { slope, l2, .. } => {
                if !slope.is_finite() || l2.is_some_and(|x| !(x >= 0.0 && x.is_finite())) {
                    return Err(Error::Config("random field needs finite slope and l2 >= 0".into()));
                }
            }
            Self::TaylorGreen { amplitude } => {
                if grid.dim() > 3 || !amplitude.is_finite() {
                    return Err(Error::Config("taylor_green needs d <= 3 and a finite amplitude".into()));
                }
            }
            Self::Zero | Self::CopyReference => {}
        }
        Ok(())
    }

    /// Builds the field; `default_seed` is used when a random preset has none.
    pub fn build(&self, grid: &Arc<TorusGrid>, default_seed: u64) -> Result<SpectralField> {
        self.check(grid)?;
        let field = match self {
            Self::Zero => return Ok(SpectralField::zeros(grid)),
            Self::CopyReference => {
                return Err(Error::Config("copy_reference has no standalone value".into()));
            }
            Self::TaylorGreen { amplitude } => SpectralField::taylor_green(grid, *amplitude)?,
            Self::Random { slope, kmax, l2, seed } => SpectralField::random(
                grid,
                &RandomFieldSpec {
                    slope: *slope,
                    kmax: *kmax,
                    l2: *l2,
                    seed: seed.unwrap_or(default_seed),
                },
            ),
            Self::Modes { modes } => {
                let list: Vec<(Vec<i64>, Vec<Complex64>)> = modes
                    .iter()
                    .map(|m| (m.k.clone(), m.amplitude.iter().map(|a| Complex64::new(a[0], a[1])).collect()))
                    .collect();
                SpectralField::from_modes(grid, &list)?
            }
        };
        Ok(solenoidal_mean_free(&field))
    }
}

fn solenoidal_mean_free(field: &SpectralField) -> SpectralField {
    let projected = leray_project(field);
    let mut comps: Vec<Vec<Complex64>> = projected.components().to_vec();
    for c in comps.iter_mut() {
        c[TorusGrid::MEAN_INDEX] = Complex64::default();
    }
    let mut out = SpectralField::from_parts(field.grid().clone(), comps, true, true);
    out.refresh_flags();
    out
}
