//! Coupled reference/assimilated runs and the measurements built on them:
//! error series, exponential decay fits, sufficient-condition thresholds, and the
//! absorbing-ball entry time.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::integrator::{nudging_term, SimState, Stepper, StepperConfig};
use crate::params::{is_admissible, PhysParams};
use crate::spectral::{inner_product, sobolev_norm};

/// Schema tag written as the first (comment) line of every series CSV.
pub const SERIES_SCHEMA: &str = "# fracda error-series v1";

pub const SERIES_COLUMNS: [&str; 12] = [
    "t",
    "l2_err",
    "valpha_err",
    "v_l2",
    "v_V",
    "v_Valpha",
    "energy_residual",
    "u_l2",
    "u_V",
    "u_Valpha",
    "u_Valpha1",
    "g_l2",
];

/// Time-stamped norms of `w = u - v`, `v` and `u`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub l2_err: Vec<f64>,
    pub valpha_err: Vec<f64>,
    pub v_l2: Vec<f64>,
    pub v_v: Vec<f64>,
    pub v_valpha: Vec<f64>,
    /// `½ d/dt‖v‖² + ν‖v‖²_{V^α} - <f,v> - μ<P I_h(u-v), v>` by centered differences.
    pub energy_residual: Vec<f64>,
    pub u_l2: Vec<f64>,
    pub u_v: Vec<f64>,
    pub u_valpha: Vec<f64>,
    pub u_valpha1: Vec<f64>,
    /// `‖f + μ P_σ I_h u‖_{L²}`, the forcing seen by the assimilated system.
    pub g_l2: Vec<f64>,
    /// `<f,v> + μ<P I_h(u-v), v>` per sample; not persisted.
    pub power: Vec<f64>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends one sample computed from a coupled state.
    pub fn record(&mut self, state: &SimState, p: &PhysParams) -> Result<()> {
        let (u, v) = match (&state.u, &state.v) {
            (Some(u), Some(v)) => (u, v),
            _ => return Err(Error::InvalidParameter("recording needs both u and v".into())),
        };
        let w = u - v;
        let alpha = p.alpha;
        self.times.push(state.t);
        self.l2_err.push(sobolev_norm(&w, 0.0));
        self.valpha_err.push(sobolev_norm(&w, alpha));
        self.v_l2.push(sobolev_norm(v, 0.0));
        self.v_v.push(sobolev_norm(v, 1.0));
        self.v_valpha.push(sobolev_norm(v, alpha));
        self.u_l2.push(sobolev_norm(u, 0.0));
        self.u_v.push(sobolev_norm(u, 1.0));
        self.u_valpha.push(sobolev_norm(u, alpha));
        self.u_valpha1.push(sobolev_norm(u, alpha + 1.0));
        let mut power = inner_product(&state.f, v)?;
        let mut g = state.f.clone();
        if p.mu > 0.0 {
            power += p.mu * inner_product(&nudging_term(&w, p)?, v)?;
            g = g.axpy(p.mu, &nudging_term(u, p)?);
        }
        self.g_l2.push(g.l2_norm());
        self.power.push(power);
        self.energy_residual.push(f64::NAN);
        Ok(())
    }

    /// Fills `energy_residual` from the recorded `v` tracks.
    pub fn finalize(&mut self, nu: f64) {
        let energy: Vec<f64> = self.v_l2.iter().map(|x| x * x).collect();
        let rate = centered_derivative(&self.times, &energy);
        self.energy_residual = (0..self.len())
            .map(|i| 0.5 * rate[i] + nu * self.v_valpha[i].powi(2) - self.power[i])
            .collect();
    }

    fn columns(&self) -> [&Vec<f64>; 12] {
        [
            &self.times,
            &self.l2_err,
            &self.valpha_err,
            &self.v_l2,
            &self.v_v,
            &self.v_valpha,
            &self.energy_residual,
            &self.u_l2,
            &self.u_v,
            &self.u_valpha,
            &self.u_valpha1,
            &self.g_l2,
        ]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SERIES_SCHEMA}")?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(SERIES_COLUMNS)?;
        let cols = self.columns();
        for i in 0..self.len() {
            writer.write_record(cols.iter().map(|c| c[i].to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.iter().ne(SERIES_COLUMNS.iter().copied()) {
            return Err(Error::Config(format!("unexpected series header {headers:?}")));
        }
        let mut series = Self::default();
        for row in reader.records() {
            let row = row?;
            let mut vals = [0.0; 12];
            for (slot, cell) in vals.iter_mut().zip(row.iter()) {
                *slot = cell
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {cell:?} in series")))?;
            }
            let [t, l2, va, vl2, vv, vva, er, ul2, uv, uva, uva1, g] = vals;
            series.times.push(t);
            series.l2_err.push(l2);
            series.valpha_err.push(va);
            series.v_l2.push(vl2);
            series.v_v.push(vv);
            series.v_valpha.push(vva);
            series.energy_residual.push(er);
            series.u_l2.push(ul2);
            series.u_v.push(uv);
            series.u_valpha.push(uva);
            series.u_valpha1.push(uva1);
            series.g_l2.push(g);
        }
        Ok(series)
    }
}

/// Fourth-order finite differences on uniformly spaced samples: five-point
/// centered stencil inside, one-sided five-point stencils at the two ends on
/// each side. Falls back to second order below five samples.
pub fn centered_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 3 {
        return vec![f64::NAN; n];
    }
    let h = (t[n - 1] - t[0]) / (n - 1) as f64;
    let mut out = vec![0.0; n];
    if n < 5 {
        for i in 1..n - 1 {
            out[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
        }
        out[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
        out[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
        return out;
    }
    let d = 12.0 * h;
    for i in 2..n - 2 {
        out[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / d;
    }
    out[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / d;
    out[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / d;
    let m = n - 1;
    out[m] = (25.0 * y[m] - 48.0 * y[m - 1] + 36.0 * y[m - 2] - 16.0 * y[m - 3] + 3.0 * y[m - 4]) / d;
    out[m - 1] = (3.0 * y[m] + 10.0 * y[m - 1] - 18.0 * y[m - 2] + 6.0 * y[m - 3] - y[m - 4]) / d;
    out
}

/// `θ = 1 - d/(4α)`; rejects `α < d/4 + 1/2`.
pub fn theta(alpha: f64, dim: usize) -> Result<f64> {
    if !is_admissible(alpha, dim) {
        return Err(Error::Inadmissible(format!(
            "alpha = {alpha} < d/4 + 1/2 = {} for d = {dim}",
            dim as f64 / 4.0 + 0.5
        )));
    }
    Ok(theta_unchecked(alpha, dim))
}

fn theta_unchecked(alpha: f64, dim: usize) -> f64 {
    1.0 - dim as f64 / (4.0 * alpha)
}

/// Final state of a run plus everything recorded along the way.
#[derive(Debug)]
pub struct RunOutcome {
    pub series: ErrorSeries,
    pub state: SimState,
    pub steps: u64,
    /// Set when the run stopped early; the series keeps the samples taken so far.
    pub error: Option<Error>,
}

/// Advances a coupled state until `cfg.t_end`, sampling every `record_every`
/// steps. `on_step` sees every state after it is produced (checkpointing).
pub fn run_coupled(
    initial: SimState,
    first_step: u64,
    p: &PhysParams,
    cfg: &StepperConfig,
    on_step: &mut dyn FnMut(u64, &SimState) -> Result<()>,
) -> Result<RunOutcome> {
    let stepper = Stepper::new(initial.grid(), *p, *cfg)?;
    run_with(&stepper, initial, first_step, on_step)
}

pub fn run_with(
    stepper: &Stepper,
    initial: SimState,
    first_step: u64,
    on_step: &mut dyn FnMut(u64, &SimState) -> Result<()>,
) -> Result<RunOutcome> {
    let cfg = *stepper.config();
    let p = *stepper.params();
    let total = cfg.steps() as u64;
    let mut series = ErrorSeries::default();
    let mut state = initial;
    if first_step.is_multiple_of(cfg.record_every as u64) {
        series.record(&state, &p)?;
    }
    let mut step = first_step;
    let mut error = None;
    while step < total {
        match stepper.step(&state) {
            Ok(next) => state = next,
            Err(e) => {
                error = Some(e);
                break;
            }
        }
        step += 1;
        if step.is_multiple_of(cfg.record_every as u64) {
            series.record(&state, &p)?;
        }
        if let Err(e) = on_step(step, &state) {
            error = Some(e);
            break;
        }
    }
    series.finalize(p.nu);
    Ok(RunOutcome {
        series,
        state,
        steps: step,
        error,
    })
}

/// Evolves the reference field alone for `duration`, returning the final field.
pub fn spin_up(
    u0: &SpectralField,
    f: &SpectralField,
    p: &PhysParams,
    dt: f64,
    duration: f64,
) -> Result<SpectralField> {
    let cfg = StepperConfig::new(dt, duration);
    let reference = PhysParams { mu: 0.0, ..*p };
    let stepper = Stepper::new(u0.grid(), reference, cfg)?;
    let mut state = SimState::new(0.0, Some(u0.clone()), None, f.clone())?;
    for _ in 0..cfg.steps() {
        state = stepper.step(&state)?;
    }
    Ok(state.u.expect("reference field"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    L2,
    Valpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Least-squares decay rate; positive means decay.
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// `log10` of the error drop across the window.
    pub decades: f64,
    pub floor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DecayResult {
    Decay(DecayFit),
    NoDecayWindow,
}

impl DecayResult {
    pub fn fit(&self) -> Option<&DecayFit> {
        match self {
            Self::Decay(fit) => Some(fit),
            Self::NoDecayWindow => None,
        }
    }
}

/// Relative floor below which errors count as converged.
pub const ERROR_FLOOR: f64 = 1e-12;
/// Minimum number of samples inside a fitting window.
pub const MIN_WINDOW: usize = 10;

/// Fits `log(err) = a - rate*t` on the window where `10*floor < err < 0.1*err(0)`.
///
/// The floor is the larger of `1e-12*err(0)` and the median error over the
/// last tenth of the recorded time span. The window is the contiguous run
/// starting at the first sample below `0.1*err(0)` and ending before the first
/// later sample at or below `10*floor`.
pub fn fit_decay_rate(series: &ErrorSeries, track: Track) -> DecayResult {
    let err = match track {
        Track::L2 => &series.l2_err,
        Track::Valpha => &series.valpha_err,
    };
    fit_decay(&series.times, err)
}

pub fn fit_decay(times: &[f64], err: &[f64]) -> DecayResult {
    let n = err.len().min(times.len());
    if n < MIN_WINDOW || !(err[0] > 0.0) {
        return DecayResult::NoDecayWindow;
    }
    let err0 = err[0];
    let (t_first, t_last) = (times[0], times[n - 1]);
    let tail_start = t_last - 0.1 * (t_last - t_first);
    let mut tail: Vec<f64> = (0..n).filter(|&i| times[i] >= tail_start).map(|i| err[i]).collect();
    tail.sort_by(f64::total_cmp);
    let plateau = tail[tail.len() / 2];
    let floor = (ERROR_FLOOR * err0).max(plateau);

    let Some(start) = (0..n).find(|&i| err[i] < 0.1 * err0 && err[i] > 10.0 * floor) else {
        return DecayResult::NoDecayWindow;
    };
    let end = (start..n).find(|&i| err[i] <= 10.0 * floor).unwrap_or(n);
    if end - start < MIN_WINDOW {
        return DecayResult::NoDecayWindow;
    }
    let xs = &times[start..end];
    let ys: Vec<f64> = err[start..end].iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 0.0 };
    DecayResult::Decay(DecayFit {
        rate: -slope,
        r_squared,
        window: (xs[0], xs[xs.len() - 1]),
        samples: xs.len(),
        decades: (err[start] / err[end - 1]).log10(),
        floor,
    })
}

/// Both sides of the sufficient conditions for one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub theta: f64,
    pub admissible: bool,
    pub mu: f64,
    pub nu: f64,
    pub h: f64,
    pub c0: f64,
    pub constant: f64,
    /// `2 C sup‖u‖_V^{1/θ}`.
    pub mu_l2_required: f64,
    /// `C (4σ_α^{2/θ} + σ_1^{1/θ} + 2σ_1^{2/θ} + σ_{α+1})`.
    pub mu_valpha_required: f64,
    /// `μ h² c0`, compared against `ν`.
    pub h_condition_lhs: f64,
    pub h_condition_ok: bool,
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma_alpha: f64,
    pub sigma_alpha_plus_1: f64,
}

fn sup(tracks: &[&Vec<f64>]) -> f64 {
    tracks
        .iter()
        .flat_map(|t| t.iter())
        .copied()
        .fold(0.0, f64::max)
}

/// Observed suprema `σ_s` over `u` and `v`, and the derived thresholds.
/// `σ_{α+1}` is taken from the reference field only.
pub fn threshold_report(series: &ErrorSeries, p: &PhysParams, dim: usize, c0: f64, constant: f64) -> ThresholdReport {
    let theta = theta_unchecked(p.alpha, dim);
    let sigma0 = sup(&[&series.u_l2, &series.v_l2]);
    let sigma1 = sup(&[&series.u_v, &series.v_v]);
    let sigma_alpha = sup(&[&series.u_valpha, &series.v_valpha]);
    let sigma_alpha_plus_1 = sup(&[&series.u_valpha1]);
    let u_v_sup = sup(&[&series.u_v]);
    let h = p.interp.h();
    let h_condition_lhs = p.mu * h * h * c0;
    ThresholdReport {
        theta,
        admissible: is_admissible(p.alpha, dim),
        mu: p.mu,
        nu: p.nu,
        h,
        c0,
        constant,
        mu_l2_required: 2.0 * constant * u_v_sup.powf(1.0 / theta),
        mu_valpha_required: constant
            * (4.0 * sigma_alpha.powf(2.0 / theta)
                + sigma1.powf(1.0 / theta)
                + 2.0 * sigma1.powf(2.0 / theta)
                + sigma_alpha_plus_1),
        h_condition_lhs,
        h_condition_ok: h_condition_lhs <= p.nu,
        sigma0,
        sigma1,
        sigma_alpha,
        sigma_alpha_plus_1,
    }
}

/// Entry time into the absorbing ball
/// `t0 = max(-(1/(νλ1^α)) ln(M / (μνλ1^α ‖v0‖²)), 0)`.
/// Returns `None` when `μ = 0`, where the bound is singular.
pub fn absorbing_ball_time(v0_l2: f64, m: f64, p: &PhysParams, lambda1: f64) -> Option<f64> {
    if p.mu <= 0.0 {
        return None;
    }
    let rate = p.nu * lambda1.powf(p.alpha);
    let arg = m / (p.mu * rate * v0_l2 * v0_l2);
    Some((-(arg.ln()) / rate).max(0.0))
}

/// Squared absorbing-ball radius `2M / (μνλ1^α)`.
pub fn absorbing_ball_radius_sq(m: f64, p: &PhysParams, lambda1: f64) -> f64 {
    2.0 * m / (p.mu * p.nu * lambda1.powf(p.alpha))
}
