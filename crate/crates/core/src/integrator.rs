//! Time stepping of the truncated reference and nudged systems.
//!
//! The fractional diffusion `νA^α` is diagonal in Fourier space and is
//! integrated exactly through the integrating factor
//! `e^{-ν(2π|k|)^{2α} t}`; advection, forcing and nudging are explicit.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::interp::apply_interpolant;
use crate::params::PhysParams;
use crate::spectral::{dealias, fractional_laplacian, fractional_symbol, leray_project, nonlinear_term};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Lawson (integrating-factor) classical fourth-order Runge-Kutta.
    #[default]
    Ifrk4,
    /// Integrating-factor forward Euler.
    Ifeuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Steps between checkpoints; zero disables them.
    pub checkpoint_every: usize,
    /// Steps between recorded samples.
    pub record_every: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::Ifrk4,
            t_end,
            checkpoint_every: 0,
            record_every: 1,
        }
    }

    pub fn validate(&self, p: &PhysParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if p.mu > 0.0 && p.mu * self.dt > 0.5 {
            return Err(Error::InvalidParameter(format!(
                "nudging stability guard violated: mu*dt = {} > 0.5",
                p.mu * self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end` from zero.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Reference field `u`, assimilated field `v`, and the forcing at time `t`.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub u: Option<SpectralField>,
    pub v: Option<SpectralField>,
    pub f: SpectralField,
}

impl SimState {
    pub fn new(t: f64, u: Option<SpectralField>, v: Option<SpectralField>, f: SpectralField) -> Result<Self> {
        let state = Self { t, u, v, f };
        state.validate()?;
        Ok(state)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.f.grid()
    }

    pub fn validate(&self) -> Result<()> {
        for field in self.u.iter().chain(self.v.iter()) {
            field.same_grid(&self.f)?;
        }
        for (name, field) in [("u", self.u.as_ref()), ("v", self.v.as_ref()), ("f", Some(&self.f))] {
            if let Some(field) = field {
                if !field.is_mean_free() || !field.is_div_free() {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be mean-free and divergence-free"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `f - B(u,u) - νA^α u`.
pub fn rhs_reference(u: &SpectralField, f: &SpectralField, p: &PhysParams) -> Result<SpectralField> {
    let explicit = reference_forcing(u, f, true)?;
    Ok(explicit.axpy(-p.nu, &fractional_laplacian(u, p.alpha)?))
}

/// `f - B(v,v) - νA^α v + μ P_σ I_h(u_obs - v)`.
pub fn rhs_nudged(
    v: &SpectralField,
    u_obs: &SpectralField,
    f: &SpectralField,
    p: &PhysParams,
) -> Result<SpectralField> {
    let explicit = nudged_forcing(v, u_obs, f, p, true)?;
    Ok(explicit.axpy(-p.nu, &fractional_laplacian(v, p.alpha)?))
}

/// `P_n P_σ I_h(w)`: the projected observation of a difference field.
pub fn nudging_term(w: &SpectralField, p: &PhysParams) -> Result<SpectralField> {
    let observed = apply_interpolant(&p.interp, w)?;
    let mut out = leray_project(&observed);
    if !p.interp.is_modal() {
        out = dealias(&out);
    }
    Ok(out)
}

fn reference_forcing(u: &SpectralField, f: &SpectralField, advect: bool) -> Result<SpectralField> {
    if advect {
        Ok(f - &nonlinear_term(u, u)?)
    } else {
        Ok(f.clone())
    }
}

fn nudged_forcing(
    v: &SpectralField,
    u_obs: &SpectralField,
    f: &SpectralField,
    p: &PhysParams,
    advect: bool,
) -> Result<SpectralField> {
    let mut out = reference_forcing(v, f, advect)?;
    if p.mu > 0.0 {
        out = out.axpy(p.mu, &nudging_term(&(u_obs - v), p)?);
    }
    Ok(out)
}

/// Precomputed integrating factors for one `(ν, α, dt)` triple.
#[derive(Clone, Debug)]
pub struct Stepper {
    params: PhysParams,
    cfg: StepperConfig,
    full: Vec<f64>,
    half: Vec<f64>,
    advect: bool,
}

impl Stepper {
    pub fn new(grid: &TorusGrid, params: PhysParams, cfg: StepperConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate(&params)?;
        params.interp.validate(grid)?;
        let rate: Vec<f64> = (0..grid.len())
            .map(|idx| params.nu * fractional_symbol(grid, idx, params.alpha))
            .collect();
        let full = rate.iter().map(|r| (-r * cfg.dt).exp()).collect();
        let half = rate.iter().map(|r| (-r * 0.5 * cfg.dt).exp()).collect();
        Ok(Self {
            params,
            cfg,
            full,
            half,
            advect: true,
        })
    }

    /// Drops the advection term. Test hook for the linear flow.
    #[doc(hidden)]
    pub fn without_advection(mut self) -> Self {
        self.advect = false;
        self
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Advances `state` by one time step.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        if self.params.mu > 0.0 && state.v.is_some() && state.u.is_none() {
            return Err(Error::InvalidParameter(
                "nudged system needs a reference field".into(),
            ));
        }
        let dt = self.cfg.dt;
        let f = &state.f;
        let (u, v) = match self.cfg.scheme {
            Scheme::Ifeuler => {
                let ku = self.eval_u(state.u.as_ref(), f)?;
                let kv = self.eval_v(state.v.as_ref(), state.u.as_ref(), f)?;
                let u = zip(&state.u, &ku, |u, k| self.decay(&u.axpy(dt, k), &self.full));
                let v = zip(&state.v, &kv, |v, k| self.decay(&v.axpy(dt, k), &self.full));
                (u, v)
            }
            Scheme::Ifrk4 => self.lawson_rk4(state)?,
        };
        let t = state.t + dt;
        for field in u.iter().chain(v.iter()) {
            if !field.is_finite() {
                return Err(Error::BlowUp { t });
            }
        }
        Ok(SimState {
            t,
            u,
            v,
            f: state.f.clone(),
        })
    }

    fn lawson_rk4(&self, state: &SimState) -> Result<(Option<SpectralField>, Option<SpectralField>)> {
        let dt = self.cfg.dt;
        let f = &state.f;
        let (u0, v0) = (state.u.as_ref(), state.v.as_ref());

        let ku1 = self.eval_u(u0, f)?;
        let kv1 = self.eval_v(v0, u0, f)?;
        let u2 = zip(&state.u, &ku1, |u, k| self.decay(&u.axpy(0.5 * dt, k), &self.half));
        let v2 = zip(&state.v, &kv1, |v, k| self.decay(&v.axpy(0.5 * dt, k), &self.half));

        let ku2 = self.eval_u(u2.as_ref(), f)?;
        let kv2 = self.eval_v(v2.as_ref(), u2.as_ref(), f)?;
        let u3 = zip(&state.u, &ku2, |u, k| self.decay(u, &self.half).axpy(0.5 * dt, k));
        let v3 = zip(&state.v, &kv2, |v, k| self.decay(v, &self.half).axpy(0.5 * dt, k));

        let ku3 = self.eval_u(u3.as_ref(), f)?;
        let kv3 = self.eval_v(v3.as_ref(), u3.as_ref(), f)?;
        let u4 = zip(&state.u, &ku3, |u, k| self.decay(u, &self.full).axpy(dt, &self.decay(k, &self.half)));
        let v4 = zip(&state.v, &kv3, |v, k| self.decay(v, &self.full).axpy(dt, &self.decay(k, &self.half)));

        let ku4 = self.eval_u(u4.as_ref(), f)?;
        let kv4 = self.eval_v(v4.as_ref(), u4.as_ref(), f)?;

        let combine = |x: &SpectralField, k1: &SpectralField, k2: &SpectralField, k3: &SpectralField, k4: &SpectralField| {
            let mid = self.decay(&(k2 + k3), &self.half);
            let incr = self.decay(k1, &self.full).axpy(2.0, &mid).axpy(1.0, k4);
            self.decay(x, &self.full).axpy(dt / 6.0, &incr)
        };
        let u = match (u0, &ku1, &ku2, &ku3, &ku4) {
            (Some(x), Some(a), Some(b), Some(c), Some(d)) => Some(combine(x, a, b, c, d)),
            _ => None,
        };
        let v = match (v0, &kv1, &kv2, &kv3, &kv4) {
            (Some(x), Some(a), Some(b), Some(c), Some(d)) => Some(combine(x, a, b, c, d)),
            _ => None,
        };
        Ok((u, v))
    }

    fn eval_u(&self, u: Option<&SpectralField>, f: &SpectralField) -> Result<Option<SpectralField>> {
        u.map(|u| reference_forcing(u, f, self.advect)).transpose()
    }

    fn eval_v(
        &self,
        v: Option<&SpectralField>,
        u: Option<&SpectralField>,
        f: &SpectralField,
    ) -> Result<Option<SpectralField>> {
        match (v, u) {
            (None, _) => Ok(None),
            (Some(v), Some(u)) => nudged_forcing(v, u, f, &self.params, self.advect).map(Some),
            (Some(v), None) => reference_forcing(v, f, self.advect).map(Some),
        }
    }

    fn decay(&self, field: &SpectralField, factor: &[f64]) -> SpectralField {
        let comps: Vec<Vec<Complex64>> = field
            .components()
            .iter()
            .map(|c| c.iter().zip(factor).map(|(z, e)| z * e).collect())
            .collect();
        SpectralField::from_parts(field.grid().clone(), comps, field.is_mean_free(), field.is_div_free())
    }
}

fn zip<F>(x: &Option<SpectralField>, k: &Option<SpectralField>, op: F) -> Option<SpectralField>
where
    F: Fn(&SpectralField, &SpectralField) -> SpectralField,
{
    match (x, k) {
        (Some(x), Some(k)) => Some(op(x, k)),
        _ => None,
    }
}

/// One step with a freshly built [`Stepper`].
pub fn step(state: &SimState, p: &PhysParams, cfg: &StepperConfig) -> Result<SimState> {
    Stepper::new(state.grid(), *p, *cfg)?.step(state)
}
