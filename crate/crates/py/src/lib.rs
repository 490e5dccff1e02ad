//! Python bindings: grids, spectral fields, norms and operators, the nudged
//! time stepper, decay fitting and config-driven runs.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fracda_core::config::RunConfig;
use fracda_core::harness::{self, RunOptions};
use fracda_core::{
    assimilation, spectral, DecayResult, InterpolantSpec, Lp, PhysParams, RandomFieldSpec, SimState, SpectralField,
    StepperConfig, TorusGrid, LAMBDA1,
};

fn py_err(e: fracda_core::Error) -> PyErr {
    match e {
        fracda_core::Error::BlowUp { .. } | fracda_core::Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn interpolant(kind: &str, param: usize) -> PyResult<InterpolantSpec> {
    match kind {
        "modal" => Ok(InterpolantSpec::ModalProjection { cutoff: param }),
        "volume_average" => Ok(InterpolantSpec::VolumeAverage { cells: param }),
        other => Err(PyValueError::new_err(format!(
            "unknown interpolant '{other}', expected 'modal' or 'volume_average'"
        ))),
    }
}

/// Periodic lattice of `n^dim` collocation points on the unit torus.
#[pyclass(frozen, from_py_object, name = "Grid", module = "fracda")]
#[derive(Clone)]
struct PyGrid {
    inner: Arc<TorusGrid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: TorusGrid::new(dim, n).map_err(py_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Largest retained `|k_j|` after dealiasing.
    #[getter]
    fn dealias_cutoff(&self) -> usize {
        self.inner.dealias_cutoff()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(dim={}, n={})", self.inner.dim(), self.inner.n())
    }
}

/// Real vector field stored as Fourier coefficients.
#[pyclass(frozen, from_py_object, name = "Field", module = "fracda")]
#[derive(Clone)]
struct PyField {
    inner: SpectralField,
}

impl From<SpectralField> for PyField {
    fn from(inner: SpectralField) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyField {
    #[staticmethod]
    fn zeros(grid: &PyGrid) -> Self {
        SpectralField::zeros(&grid.inner).into()
    }

    /// Seeded field with `|k|^-slope` amplitudes, Leray-projected.
    #[staticmethod]
    #[pyo3(signature = (grid, seed, slope = 2.0, kmax = None, l2 = Some(1.0)))]
    fn random(grid: &PyGrid, seed: u64, slope: f64, kmax: Option<usize>, l2: Option<f64>) -> Self {
        let f = SpectralField::random(&grid.inner, &RandomFieldSpec { slope, kmax, l2, seed });
        spectral::leray_project(&f).into()
    }

    #[staticmethod]
    #[pyo3(signature = (grid, amplitude = 1.0))]
    fn taylor_green(grid: &PyGrid, amplitude: f64) -> PyResult<Self> {
        Ok(SpectralField::taylor_green(&grid.inner, amplitude).map_err(py_err)?.into())
    }

    /// `modes` is a list of `(k, amplitudes)` pairs; `-k` receives the conjugate.
    #[staticmethod]
    fn from_modes(grid: &PyGrid, modes: Vec<(Vec<i64>, Vec<Complex64>)>) -> PyResult<Self> {
        Ok(SpectralField::from_modes(&grid.inner, &modes).map_err(py_err)?.into())
    }

    /// One flat list of `n^dim` values per component, row-major in `(x, y[, z])`.
    #[staticmethod]
    fn from_physical(grid: &PyGrid, values: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(SpectralField::from_physical(&grid.inner, &values).map_err(py_err)?.into())
    }

    fn to_physical(&self) -> Vec<Vec<f64>> {
        self.inner.to_physical()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid().clone(),
        }
    }

    fn mode(&self, k: Vec<i64>) -> Vec<Complex64> {
        self.inner.mode(&k)
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    /// `‖A^{s/2} u‖` with symbol `(2π|k|)^s`.
    fn sobolev_norm(&self, s: f64) -> f64 {
        spectral::sobolev_norm(&self.inner, s)
    }

    /// `L^p` norm by quadrature; `p = float('inf')` gives the sup norm.
    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        if p.is_infinite() && p > 0.0 {
            Ok(spectral::lp_norm(&self.inner, Lp::Inf))
        } else if p >= 1.0 {
            Ok(spectral::lp_norm(&self.inner, Lp::P(p)))
        } else {
            Err(PyValueError::new_err(format!("p must be >= 1, got {p}")))
        }
    }

    fn leray(&self) -> Self {
        spectral::leray_project(&self.inner).into()
    }

    fn dealias(&self) -> Self {
        spectral::dealias(&self.inner).into()
    }

    /// Applies `A^s`.
    fn fractional_laplacian(&self, s: f64) -> PyResult<Self> {
        Ok(spectral::fractional_laplacian(&self.inner, s).map_err(py_err)?.into())
    }

    fn resample(&self, grid: &PyGrid) -> PyResult<Self> {
        Ok(self.inner.resample(&grid.inner).map_err(py_err)?.into())
    }

    fn scale(&self, factor: f64) -> Self {
        self.inner.scale(factor).into()
    }

    fn reality_defect(&self) -> f64 {
        self.inner.reality_defect()
    }

    fn divergence_defect(&self) -> f64 {
        self.inner.divergence_defect()
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        self.inner.same_grid(&other.inner).map_err(py_err)?;
        Ok((&self.inner + &other.inner).into())
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        self.inner.same_grid(&other.inner).map_err(py_err)?;
        Ok((&self.inner - &other.inner).into())
    }

    fn __repr__(&self) -> String {
        format!(
            "Field(dim={}, n={}, l2={:.6e})",
            self.inner.dim(),
            self.inner.grid().n(),
            self.inner.l2_norm()
        )
    }
}

/// Fourth-order integrating-factor stepper for the reference and nudged systems.
#[pyclass(frozen, name = "Stepper", module = "fracda")]
struct PyStepper {
    inner: fracda_core::Stepper,
}

#[pymethods]
impl PyStepper {
    #[new]
    #[pyo3(signature = (grid, nu, alpha, dt, mu = 0.0, interpolant = "modal", param = 1))]
    #[allow(clippy::too_many_arguments)]
    fn new(grid: &PyGrid, nu: f64, alpha: f64, dt: f64, mu: f64, interpolant: &str, param: usize) -> PyResult<Self> {
        let p = PhysParams {
            nu,
            alpha,
            mu,
            interp: self::interpolant(interpolant, param)?,
        };
        let cfg = StepperConfig::new(dt, dt);
        Ok(Self {
            inner: fracda_core::Stepper::new(&grid.inner, p, cfg).map_err(py_err)?,
        })
    }

    /// Advances `steps` steps from time `t`; returns `(t, u, v)`. Either of
    /// `u`, `v` may be `None` to step only the other.
    #[pyo3(signature = (u, v, f, t = 0.0, steps = 1))]
    fn advance(
        &self,
        py: Python<'_>,
        u: Option<PyField>,
        v: Option<PyField>,
        f: PyField,
        t: f64,
        steps: usize,
    ) -> PyResult<(f64, Option<PyField>, Option<PyField>)> {
        let mut state = SimState::new(t, u.map(|x| x.inner), v.map(|x| x.inner), f.inner).map_err(py_err)?;
        let state = py
            .detach(|| {
                for _ in 0..steps {
                    state = self.inner.step(&state)?;
                }
                Ok(state)
            })
            .map_err(py_err)?;
        Ok((state.t, state.u.map(Into::into), state.v.map(Into::into)))
    }
}

#[pyfunction]
fn nonlinear_term(a: &PyField, b: &PyField) -> PyResult<PyField> {
    Ok(spectral::nonlinear_term(&a.inner, &b.inner).map_err(py_err)?.into())
}

#[pyfunction]
fn trilinear(a: &PyField, b: &PyField, c: &PyField) -> PyResult<f64> {
    spectral::trilinear(&a.inner, &b.inner, &c.inner).map_err(py_err)
}

#[pyfunction]
fn inner_product(a: &PyField, b: &PyField) -> PyResult<f64> {
    spectral::inner_product(&a.inner, &b.inner).map_err(py_err)
}

#[pyfunction]
fn apply_interpolant(field: &PyField, kind: &str, param: usize) -> PyResult<PyField> {
    Ok(fracda_core::apply_interpolant(&interpolant(kind, param)?, &field.inner)
        .map_err(py_err)?
        .into())
}

#[pyfunction]
#[pyo3(signature = (kind, param, fields, alpha, s = 0.0))]
fn measure_interp_constant(kind: &str, param: usize, fields: Vec<PyField>, alpha: f64, s: f64) -> PyResult<f64> {
    let corpus: Vec<SpectralField> = fields.into_iter().map(|f| f.inner).collect();
    fracda_core::measure_interp_constant(&interpolant(kind, param)?, &corpus, s, alpha).map_err(py_err)
}

/// `1 - d/(4α)`.
#[pyfunction]
fn theta(alpha: f64, dim: usize) -> PyResult<f64> {
    assimilation::theta(alpha, dim).map_err(py_err)
}

/// Absorbing-ball entry time, or `None` for `mu = 0`.
#[pyfunction]
fn absorbing_ball_time(v0_l2: f64, m: f64, nu: f64, alpha: f64, mu: f64) -> Option<f64> {
    let p = PhysParams {
        nu,
        alpha,
        mu,
        interp: InterpolantSpec::ModalProjection { cutoff: 1 },
    };
    assimilation::absorbing_ball_time(v0_l2, m, &p, LAMBDA1)
}

/// Exponential fit of an error history; `None` when there is no decay window.
#[pyfunction]
fn fit_decay<'py>(py: Python<'py>, times: Vec<f64>, errors: Vec<f64>) -> PyResult<Option<Bound<'py, PyDict>>> {
    if times.len() != errors.len() {
        return Err(PyValueError::new_err("times and errors differ in length"));
    }
    match assimilation::fit_decay(&times, &errors) {
        DecayResult::NoDecayWindow => Ok(None),
        DecayResult::Decay(fit) => {
            let d = PyDict::new(py);
            d.set_item("rate", fit.rate)?;
            d.set_item("r_squared", fit.r_squared)?;
            d.set_item("window", fit.window)?;
            d.set_item("samples", fit.samples)?;
            d.set_item("decades", fit.decades)?;
            d.set_item("floor", fit.floor)?;
            Ok(Some(d))
        }
    }
}

/// Runs the experiment described by a TOML config string and writes its
/// artifacts to `out_dir`. Returns `(report_toml, series)` where `series`
/// maps column names to lists.
#[pyfunction]
#[pyo3(signature = (config_toml, out_dir, strict_admissibility = false))]
fn run_config<'py>(
    py: Python<'py>,
    config_toml: &str,
    out_dir: PathBuf,
    strict_admissibility: bool,
) -> PyResult<(String, Bound<'py, PyDict>)> {
    let cfg = RunConfig::from_toml(config_toml).map_err(py_err)?;
    cfg.validate(strict_admissibility).map_err(py_err)?;
    let opts = RunOptions {
        out_dir,
        strict_admissibility,
        quiet: true,
        ..Default::default()
    };
    let summary = py.detach(|| harness::execute(&cfg, &opts)).map_err(py_err)?;
    if let Some(e) = summary.failure {
        return Err(py_err(e));
    }
    let s = &summary.series;
    let d = PyDict::new(py);
    d.set_item("t", &s.times)?;
    d.set_item("l2_err", &s.l2_err)?;
    d.set_item("valpha_err", &s.valpha_err)?;
    d.set_item("v_l2", &s.v_l2)?;
    d.set_item("u_l2", &s.u_l2)?;
    d.set_item("g_l2", &s.g_l2)?;
    d.set_item("energy_residual", &s.energy_residual)?;
    Ok((summary.report.to_toml().map_err(py_err)?, d))
}

#[pymodule]
fn fracda(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyStepper>()?;
    m.add_function(wrap_pyfunction!(nonlinear_term, m)?)?;
    m.add_function(wrap_pyfunction!(trilinear, m)?)?;
    m.add_function(wrap_pyfunction!(inner_product, m)?)?;
    m.add_function(wrap_pyfunction!(apply_interpolant, m)?)?;
    m.add_function(wrap_pyfunction!(measure_interp_constant, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(absorbing_ball_time, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("LAMBDA1", LAMBDA1)?;
    Ok(())
}
