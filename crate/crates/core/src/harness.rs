//! Run, sweep and report plumbing behind the `fracda` command line.
//!
//! A run directory holds:
//!
//! - `config.toml`: the resolved configuration (after overrides)
//! - `series.csv`: the error series (see [`crate::assimilation::SERIES_SCHEMA`])
//! - `report.toml`: decay fits, sufficient-condition thresholds, uniform-bound monitor
//! - `u_final.ckpt`, `v_final.ckpt`: final spectral states
//! - `checkpoints/step_NNNNNNNN/{u,v}.ckpt`: intermediate states, if enabled
//! - `plot.gp`: gnuplot script for the error curves

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assimilation::{
    absorbing_ball_radius_sq, absorbing_ball_time, fit_decay_rate, run_coupled, spin_up, threshold_report,
    DecayFit, DecayResult, ErrorSeries, ThresholdReport, Track,
};
use crate::checkpoint;
use crate::config::{C0Spec, RunConfig};
use crate::diagnostics::{Corpus, CorpusSpec};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::integrator::SimState;
use crate::interp::measure_interp_constant;
use crate::params::LAMBDA1;

pub const SWEEP_SCHEMA: &str = "# fracda sweep-summary v1";
/// Upper bound on the number of runs in one sweep.
pub const MAX_SWEEP_RUNS: usize = 256;
/// Fixed seed of the corpus used to measure `c0`, independent of the run seed.
pub const C0_CORPUS_SEED: u64 = 1000;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub strict_admissibility: bool,
    /// Directory holding `u.ckpt` and `v.ckpt` to continue from.
    pub resume: Option<PathBuf>,
    pub quiet: bool,
}

/// Decay fit flattened for the report file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decades: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

impl From<DecayResult> for DecaySummary {
    fn from(r: DecayResult) -> Self {
        match r {
            DecayResult::NoDecayWindow => Self::default(),
            DecayResult::Decay(DecayFit {
                rate,
                r_squared,
                window,
                samples,
                decades,
                floor,
            }) => Self {
                found: true,
                rate: Some(rate),
                r_squared: Some(r_squared),
                decades: Some(decades),
                window_start: Some(window.0),
                window_end: Some(window.1),
                samples: Some(samples),
                floor: Some(floor),
            },
        }
    }
}

impl DecaySummary {
    /// Decay observed with at least the given fit quality.
    pub fn decays_with(&self, min_r2: f64) -> bool {
        self.found && self.rate.is_some_and(|r| r > 0.0) && self.r_squared.is_some_and(|r2| r2 >= min_r2)
    }
}

/// Absorbing-ball monitor: `M = sup ‖f + μ P_σ I_h u‖²`, entry time `t0`,
/// and whether `‖v(t)‖² <= 2M/(μνλ1^α)` for every sample with `t >= t0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BallMonitor {
    pub enabled: bool,
    pub m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_sq: Option<f64>,
    /// Samples checked (those at or after `t0`).
    pub checked: usize,
    /// Largest `‖v‖² / radius²` over the checked samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
    pub holds: bool,
}

/// Uniform-bound monitor over the `v` tracks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsMonitor {
    pub sup_v_l2: f64,
    pub sup_v_v: f64,
    pub sup_v_valpha: f64,
    /// Largest initial norm of `u` or `v` in the same three norms.
    pub initial_scale: f64,
    /// All sups finite and below `1e3 * initial_scale`.
    pub bounded: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub dim: usize,
    pub n: usize,
    pub steps: u64,
    pub samples: usize,
    pub t_final: f64,
    pub elapsed_seconds: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: RunInfo,
    pub decay_l2: DecaySummary,
    pub decay_valpha: DecaySummary,
    pub threshold: Option<ThresholdReport>,
    pub absorbing_ball: BallMonitor,
    pub bounds: BoundsMonitor,
}

impl RunReport {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub series: ErrorSeries,
    pub report: RunReport,
    pub state: SimState,
    /// Set when the run stopped early (blow-up or I/O failure while stepping).
    pub failure: Option<Error>,
}

/// `c0` from the config: a fixed value, or the constant measured on a seeded corpus.
pub fn resolve_c0(cfg: &RunConfig) -> Result<f64> {
    match cfg.report.c0 {
        C0Spec::Value(c) => Ok(c),
        C0Spec::Keyword(_) => {
            let grid = cfg.make_grid()?;
            let corpus = Corpus::generate(
                &grid,
                &CorpusSpec {
                    size: cfg.report.corpus_size,
                    slopes: vec![cfg.report.corpus_slope],
                    kmax: None,
                    seed: C0_CORPUS_SEED,
                },
            );
            measure_interp_constant(&cfg.interpolant, &corpus.fields, 0.0, cfg.phys.alpha)
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn sup_finite(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Builds the report from a recorded series.
pub fn build_report(cfg: &RunConfig, series: &ErrorSeries, c0: f64) -> RunReport {
    let p = cfg.phys_params();
    let threshold = threshold_report(series, &p, cfg.grid.dim, c0, cfg.report.constant);

    let mut ball = BallMonitor::default();
    if p.mu > 0.0 && !series.is_empty() {
        let m = sup(&series.g_l2).powi(2);
        ball.m = m;
        if m > 0.0 {
            let t0 = absorbing_ball_time(series.v_l2[0], m, &p, LAMBDA1).unwrap_or(0.0);
            let r2 = absorbing_ball_radius_sq(m, &p, LAMBDA1);
            let start = series.times[0];
            let ratios: Vec<f64> = series
                .times
                .iter()
                .zip(&series.v_l2)
                .filter(|(t, _)| **t - start >= t0)
                .map(|(_, v)| v * v / r2)
                .collect();
            ball.enabled = true;
            ball.t0 = Some(t0);
            ball.radius_sq = Some(r2);
            ball.checked = ratios.len();
            ball.max_ratio = Some(sup_finite(&ratios));
            ball.holds = ratios.iter().all(|r| *r <= 1.0);
        }
    }

    let first = |v: &Vec<f64>| v.first().copied().unwrap_or(0.0);
    let initial_scale = [
        &series.u_l2,
        &series.u_v,
        &series.u_valpha,
        &series.v_l2,
        &series.v_v,
        &series.v_valpha,
    ]
    .into_iter()
    .map(first)
    .fold(0.0, f64::max);
    let (sup_v_l2, sup_v_v, sup_v_valpha) = (
        sup_finite(&series.v_l2),
        sup_finite(&series.v_v),
        sup_finite(&series.v_valpha),
    );
    let limit = 1e3 * initial_scale;
    let bounds = BoundsMonitor {
        sup_v_l2,
        sup_v_v,
        sup_v_valpha,
        initial_scale,
        bounded: [sup_v_l2, sup_v_v, sup_v_valpha].iter().all(|s| s.is_finite() && *s <= limit),
    };

    RunReport {
        run: RunInfo {
            status: "completed".into(),
            message: None,
            dim: cfg.grid.dim,
            n: cfg.grid.n,
            steps: 0,
            samples: series.len(),
            t_final: series.times.last().copied().unwrap_or(0.0),
            elapsed_seconds: 0.0,
            admissible: cfg.is_admissible(),
        },
        decay_l2: fit_decay_rate(series, Track::L2).into(),
        decay_valpha: fit_decay_rate(series, Track::Valpha).into(),
        threshold: Some(threshold),
        absorbing_ball: ball,
        bounds,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn checkpoint_dir(out: &Path, step: u64) -> PathBuf {
    out.join("checkpoints").join(format!("step_{step:08}"))
}

/// Writes `u.ckpt` and `v.ckpt` for a coupled state into `dir`.
pub fn write_state(dir: &Path, state: &SimState, alpha: f64, step: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(u) = &state.u {
        checkpoint::write(&dir.join("u.ckpt"), u, alpha, state.t, step)?;
    }
    if let Some(v) = &state.v {
        checkpoint::write(&dir.join("v.ckpt"), v, alpha, state.t, step)?;
    }
    Ok(())
}

fn gnuplot_script() -> String {
    [
        "# gnuplot script; run from the run directory: gnuplot -p plot.gp",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        "set logscale y",
        "set format y '10^{%L}'",
        "set xlabel 't'",
        "set ylabel 'error norm'",
        "set grid",
        "plot 'series.csv' using 1:2 with lines lw 2 title '||u-v||_{L^2}', \\",
        "     'series.csv' using 1:3 with lines lw 2 title '||u-v||_{V^alpha}'",
        "",
    ]
    .join("\n")
}

/// Executes one configured run and writes its artifacts to `opts.out_dir`.
///
/// Configuration errors are returned as `Err`. A run that stops early keeps
/// its partial series and report and carries the cause in `failure`.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate(opts.strict_admissibility)?;
    let started = Instant::now();
    let out = &opts.out_dir;
    fs::create_dir_all(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml()?)?;

    let grid = cfg.make_grid()?;
    let p = cfg.phys_params();
    let scfg = cfg.stepper_config();
    let fields = cfg.build_fields(&grid)?;

    let (initial, first_step) = match &opts.resume {
        Some(dir) => resume_state(dir, &grid, fields.f)?,
        None => {
            let u = if cfg.spinup.duration > 0.0 {
                spin_up(&fields.u0, &fields.f, &p, cfg.spinup_dt(), cfg.spinup.duration)?
            } else {
                fields.u0
            };
            let v = fields.v0.unwrap_or_else(|| u.clone());
            (SimState::new(0.0, Some(u), Some(v), fields.f)?, 0)
        }
    };
    if !opts.quiet {
        eprintln!(
            "run: d={} n={} nu={} alpha={} mu={} interp={} dt={} t_end={}",
            cfg.grid.dim, cfg.grid.n, p.nu, p.alpha, p.mu, p.interp, scfg.dt, scfg.t_end
        );
    }

    let ckpt_every = if cfg.output.checkpoints { scfg.checkpoint_every as u64 } else { 0 };
    let alpha = p.alpha;
    let mut on_step = |step: u64, state: &SimState| -> Result<()> {
        if ckpt_every > 0 && step.is_multiple_of(ckpt_every) {
            write_state(&checkpoint_dir(out, step), state, alpha, step)?;
        }
        Ok(())
    };
    let outcome = run_coupled(initial, first_step, &p, &scfg, &mut on_step)?;

    if cfg.output.csv {
        let file = BufWriter::new(fs::File::create(out.join("series.csv"))?);
        outcome.series.write_csv(file)?;
    }
    if cfg.output.checkpoints {
        let s = &outcome.state;
        if let Some(u) = &s.u {
            checkpoint::write(&out.join("u_final.ckpt"), u, alpha, s.t, outcome.steps)?;
        }
        if let Some(v) = &s.v {
            checkpoint::write(&out.join("v_final.ckpt"), v, alpha, s.t, outcome.steps)?;
        }
    }
    if cfg.output.plot && cfg.output.csv {
        write_text(&out.join("plot.gp"), &gnuplot_script())?;
    }

    let c0 = resolve_c0(cfg)?;
    let mut report = build_report(cfg, &outcome.series, c0);
    report.run.steps = outcome.steps;
    report.run.elapsed_seconds = started.elapsed().as_secs_f64();
    if let Some(e) = &outcome.error {
        report.run.status = match e {
            Error::BlowUp { .. } => "blow_up".into(),
            _ => "failed".into(),
        };
        report.run.message = Some(e.to_string());
    }
    write_text(&out.join("report.toml"), &report.to_toml()?)?;

    Ok(RunSummary {
        out_dir: out.clone(),
        series: outcome.series,
        report,
        state: outcome.state,
        failure: outcome.error,
    })
}

fn resume_state(dir: &Path, grid: &std::sync::Arc<TorusGrid>, f: crate::field::SpectralField) -> Result<(SimState, u64)> {
    let (hu, u) = checkpoint::read_on(&dir.join("u.ckpt"), grid)?;
    let (hv, v) = checkpoint::read_on(&dir.join("v.ckpt"), grid)?;
    if hu.step != hv.step || hu.t.to_bits() != hv.t.to_bits() {
        return Err(Error::Checkpoint {
            path: dir.to_path_buf(),
            reason: format!("u at step {} but v at step {}", hu.step, hv.step),
        });
    }
    Ok((SimState::new(hu.t, Some(u), Some(v), f)?, hu.step))
}

/// Recomputes the report of an existing run directory from its
/// `config.toml` and `series.csv`.
pub fn report_dir(dir: &Path) -> Result<RunReport> {
    let cfg = RunConfig::load(&dir.join("config.toml"), false)?;
    let series = ErrorSeries::read_csv(fs::File::open(dir.join("series.csv"))?)?;
    let c0 = resolve_c0(&cfg)?;
    let mut report = build_report(&cfg, &series, c0);
    if let Ok(text) = fs::read_to_string(dir.join("report.toml")) {
        if let Ok(previous) = RunReport::from_toml(&text) {
            report.run = RunInfo {
                samples: series.len(),
                ..previous.run
            };
        }
    }
    Ok(report)
}

/// One sweep axis: parameter name and values.
pub type SweepAxis = (String, Vec<f64>);

/// Parses `name=v1,v2,...`; an empty value list is allowed.
pub fn parse_sweep_arg(arg: &str) -> Result<SweepAxis> {
    let (name, values) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep '{arg}' is not of the form name=v1,v2")))?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("sweep value '{s}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((name.trim().to_string(), values))
}

/// Cartesian product in row-major order (last axis fastest).
pub fn sweep_points(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    if axes.is_empty() {
        return Vec::new();
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for (_, values) in axes {
        points = points
            .iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    points
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    pub strict_admissibility: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub params: Vec<f64>,
    pub status: String,
    pub message: String,
    pub report: Option<RunReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

const SUMMARY_TAIL: [&str; 25] = [
    "status",
    "l2_rate",
    "l2_r2",
    "l2_decades",
    "valpha_rate",
    "valpha_r2",
    "theta",
    "mu",
    "nu",
    "h",
    "c0",
    "constant",
    "mu_l2_required",
    "mu_valpha_required",
    "h_condition_lhs",
    "h_condition_ok",
    "sigma0",
    "sigma1",
    "sigma_alpha",
    "sigma_alpha_plus_1",
    "ball_holds",
    "bounded",
    "steps",
    "elapsed_seconds",
    "message",
];

impl SweepSummary {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["index".to_string()];
        h.extend(self.names.iter().cloned());
        h.extend(SUMMARY_TAIL.iter().map(|s| s.to_string()));
        h
    }

    /// Writes the summary; the `elapsed_seconds` column is the only
    /// non-deterministic one.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SWEEP_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![row.index.to_string()];
            rec.extend(row.params.iter().map(|v| v.to_string()));
            rec.push(row.status.clone());
            match &row.report {
                Some(r) => {
                    rec.extend([
                        opt(r.decay_l2.rate),
                        opt(r.decay_l2.r_squared),
                        opt(r.decay_l2.decades),
                        opt(r.decay_valpha.rate),
                        opt(r.decay_valpha.r_squared),
                    ]);
                    match &r.threshold {
                        Some(t) => rec.extend([
                            t.theta.to_string(),
                            t.mu.to_string(),
                            t.nu.to_string(),
                            t.h.to_string(),
                            t.c0.to_string(),
                            t.constant.to_string(),
                            t.mu_l2_required.to_string(),
                            t.mu_valpha_required.to_string(),
                            t.h_condition_lhs.to_string(),
                            t.h_condition_ok.to_string(),
                            t.sigma0.to_string(),
                            t.sigma1.to_string(),
                            t.sigma_alpha.to_string(),
                            t.sigma_alpha_plus_1.to_string(),
                        ]),
                        None => rec.extend(std::iter::repeat_n(String::new(), 14)),
                    }
                    rec.extend([
                        r.absorbing_ball.holds.to_string(),
                        r.bounds.bounded.to_string(),
                        r.run.steps.to_string(),
                        r.run.elapsed_seconds.to_string(),
                    ]);
                }
                None => rec.extend(std::iter::repeat_n(String::new(), SUMMARY_TAIL.len() - 2)),
            }
            rec.push(row.message.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a summary back as header plus string rows.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Runs every point of the cartesian product of `axes` on a worker pool.
/// Each run writes into `run_NNN/`; a failing run is recorded in its row and
/// the sweep continues. Rows are ordered by index regardless of scheduling.
pub fn sweep(base: &RunConfig, axes: &[SweepAxis], opts: &SweepOptions) -> Result<SweepSummary> {
    use rayon::prelude::*;

    for (name, _) in axes {
        base.clone().set_param(name, 0.0).or_else(|e| match e {
            Error::Config(msg) if msg.starts_with("unknown parameter") => Err(Error::Config(msg)),
            _ => Ok(()),
        })?;
    }
    let points = sweep_points(axes);
    if points.len() > MAX_SWEEP_RUNS {
        return Err(Error::Config(format!(
            "sweep has {} runs, more than the limit of {MAX_SWEEP_RUNS}",
            points.len()
        )));
    }
    fs::create_dir_all(&opts.out_dir)?;
    let names: Vec<String> = axes.iter().map(|(n, _)| n.clone()).collect();

    let run_one = |(index, params): (usize, &Vec<f64>)| -> SweepRow {
        let mut cfg = base.clone();
        cfg.sweep.clear();
        let applied = names.iter().zip(params).try_for_each(|(n, v)| cfg.set_param(n, *v));
        let opts = RunOptions {
            out_dir: opts.out_dir.join(format!("run_{index:03}")),
            strict_admissibility: opts.strict_admissibility,
            resume: None,
            quiet: true,
        };
        let result = applied.and_then(|_| execute(&cfg, &opts));
        match result {
            Ok(summary) => SweepRow {
                index,
                params: params.clone(),
                status: summary.report.run.status.clone(),
                message: summary.failure.map(|e| e.to_string()).unwrap_or_default(),
                report: Some(summary.report),
            },
            Err(e) => SweepRow {
                index,
                params: params.clone(),
                status: "error".into(),
                message: e.to_string(),
                report: None,
            },
        }
    };

    let indexed: Vec<(usize, &Vec<f64>)> = points.iter().enumerate().collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| indexed.into_par_iter().map(run_one).collect());

    let summary = SweepSummary { names, rows };
    let file = BufWriter::new(fs::File::create(opts.out_dir.join("summary.csv"))?);
    summary.write_csv(file)?;
    Ok(summary)
}

/// Sweep axes from the config's `[sweep]` table followed by extra axes
/// (command line); a name given on the command line replaces the table entry.
pub fn merge_axes(cfg: &RunConfig, extra: &[SweepAxis]) -> Vec<SweepAxis> {
    let mut axes: Vec<SweepAxis> = cfg
        .sweep
        .iter()
        .filter(|(k, _)| !extra.iter().any(|(n, _)| n == *k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    axes.extend(extra.iter().cloned());
    axes
}
