//! Empirical checks of the functional inequalities behind the convergence
//! proofs, energy budgets of recorded runs, and Galerkin refinement studies.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assimilation::{spin_up, theta, ErrorSeries};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{RandomFieldSpec, SpectralField};
use crate::grid::TorusGrid;
use crate::integrator::{SimState, Stepper};
use crate::params::PhysParams;
use crate::spectral::{fractional_laplacian, lp_norm, sobolev_norm, trilinear, Lp};

pub const RECORD_SCHEMA: &str = "# fracda inequality-records v1";

/// One measured instance of `lhs <= C * rhs_without_constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs_without_constant: f64,
    /// `lhs / rhs`; infinite when `rhs = 0 < lhs`.
    pub ratio: f64,
    pub field_descriptor: String,
}

impl InequalityRecord {
    /// `None` when both sides vanish (nothing to measure).
    pub fn new(name: &str, lhs: f64, rhs: f64, field_descriptor: String) -> Option<Self> {
        let lhs = lhs.abs();
        if lhs == 0.0 && rhs == 0.0 {
            return None;
        }
        let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs / rhs };
        Some(Self {
            name: name.to_string(),
            lhs,
            rhs_without_constant: rhs,
            ratio,
            field_descriptor,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.ratio.is_finite()
    }
}

pub fn write_records_csv<W: Write>(records: &[InequalityRecord], mut out: W) -> Result<()> {
    writeln!(out, "{RECORD_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<InequalityRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Seeded random solenoidal fields; member `i` uses `slopes[i % len]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub size: usize,
    pub slopes: Vec<f64>,
    pub kmax: Option<usize>,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            size: 100,
            slopes: vec![2.0],
            kmax: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub fields: Vec<SpectralField>,
    pub descriptors: Vec<String>,
}

impl Corpus {
    pub fn generate(grid: &Arc<TorusGrid>, spec: &CorpusSpec) -> Self {
        let slopes: &[f64] = if spec.slopes.is_empty() { &[2.0] } else { &spec.slopes };
        let mut fields = Vec::with_capacity(spec.size);
        let mut descriptors = Vec::with_capacity(spec.size);
        for i in 0..spec.size {
            let slope = slopes[i % slopes.len()];
            let seed = spec.seed.wrapping_add(i as u64);
            fields.push(SpectralField::random(
                grid,
                &RandomFieldSpec {
                    slope,
                    kmax: spec.kmax,
                    l2: Some(1.0),
                    seed,
                },
            ));
            descriptors.push(format!("seed={seed} slope={slope}"));
        }
        Self { fields, descriptors }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Same members on another grid (shared modes, see [`SpectralField::resample`]).
    pub fn resample(&self, grid: &Arc<TorusGrid>) -> Result<Self> {
        Ok(Self {
            fields: self.fields.iter().map(|f| f.resample(grid)).collect::<Result<_>>()?,
            descriptors: self.descriptors.clone(),
        })
    }
}

/// Grid with twice the modes per axis, for quadrature of nonlinear quantities.
fn refined(grid: &TorusGrid) -> Result<Arc<TorusGrid>> {
    TorusGrid::new(grid.dim(), 2 * grid.n())
}

/// `b(u,v,w)` in the skew form `½(b(u,v,w) - b(u,w,v))`, which equals `b`
/// for solenoidal `u` and vanishes identically when `w = v`.
pub fn trilinear_skew(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    Ok(0.5 * (trilinear(u, v, w)? - trilinear(u, w, v)?))
}

/// The three trilinear estimates for one triple, in the order
/// `inf22`, `424`, `442`. Entries are `None` when both sides vanish.
pub fn trilinear_records(
    u: &SpectralField,
    v: &SpectralField,
    w: &SpectralField,
    alpha: f64,
    descriptor: &str,
) -> Result<[Option<InequalityRecord>; 3]> {
    let th = theta(alpha, u.dim())?;
    let lhs = trilinear_skew(u, v, w)?.abs();
    let fine = refined(u.grid())?;
    let u_inf = lp_norm(&u.resample(&fine)?, Lp::Inf);
    let l2 = |f: &SpectralField| sobolev_norm(f, 0.0);
    let va = |f: &SpectralField| sobolev_norm(f, alpha);
    let v1 = sobolev_norm(v, 1.0);
    let interp = |f: &SpectralField| l2(f).powf(th) * va(f).powf(1.0 - th);
    let rhs_inf22 = u_inf * v1 * l2(w);
    let rhs_424 = interp(u) * v1 * interp(w);
    let rhs_442 = va(u) * v1.powf(th) * sobolev_norm(v, alpha + 1.0).powf(1.0 - th) * l2(w);
    Ok([
        InequalityRecord::new("trilinear_inf22", lhs, rhs_inf22, descriptor.to_string()),
        InequalityRecord::new("trilinear_424", lhs, rhs_424, descriptor.to_string()),
        InequalityRecord::new("trilinear_442", lhs, rhs_442, descriptor.to_string()),
    ])
}

fn keep_worst(slot: &mut Option<InequalityRecord>, candidate: Option<InequalityRecord>) {
    if let Some(c) = candidate {
        let replace = match slot {
            None => true,
            Some(s) => !(c.ratio <= s.ratio),
        };
        if replace {
            *slot = Some(c);
        }
    }
}

/// Largest ratio of each trilinear estimate over the triples
/// `(f_i, f_{i+1}, f_{i+2})` (indices mod corpus size).
pub fn check_trilinear_bounds(corpus: &Corpus, alpha: f64) -> Result<Vec<InequalityRecord>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let m = corpus.len();
    let mut worst: [Option<InequalityRecord>; 3] = [None, None, None];
    for i in 0..m {
        let (j, k) = ((i + 1) % m, (i + 2) % m);
        let desc = format!(
            "u[{}] v[{}] w[{}]",
            corpus.descriptors[i], corpus.descriptors[j], corpus.descriptors[k]
        );
        let recs = trilinear_records(&corpus.fields[i], &corpus.fields[j], &corpus.fields[k], alpha, &desc)?;
        for (slot, rec) in worst.iter_mut().zip(recs) {
            keep_worst(slot, rec);
        }
    }
    Ok(worst.into_iter().flatten().collect())
}

/// `Λ^s = (-Δ)^{s/2}`; the identity at `s = 0`.
fn riesz(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if s == 0.0 {
        Ok(field.clone())
    } else {
        fractional_laplacian(field, 0.5 * s)
    }
}

/// Componentwise product `(f_1 g_1, ..., f_d g_d)` on the collocation grid.
fn pointwise_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    f.same_grid(g)?;
    let fp = f.to_physical();
    let gp = g.to_physical();
    let prod: Vec<Vec<f64>> = fp
        .iter()
        .zip(&gp)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect())
        .collect();
    SpectralField::from_physical(f.grid(), &prod)
}

/// `‖Λ^s(fg)‖_{4/3}` against `‖Λ^s f‖_2 ‖g‖_4 + ‖f‖_4 ‖Λ^s g‖_2`, evaluated
/// on a grid refined by two so the product is represented exactly.
pub fn kato_ponce_record(f: &SpectralField, g: &SpectralField, s: f64, descriptor: &str) -> Result<Option<InequalityRecord>> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!("Kato-Ponce needs s >= 0, got {s}")));
    }
    let fine = refined(f.grid())?;
    let f = f.resample(&fine)?;
    let g = g.resample(&fine)?;
    let lhs = lp_norm(&riesz(&pointwise_product(&f, &g)?, s)?, Lp::P(4.0 / 3.0));
    let rhs = lp_norm(&riesz(&f, s)?, Lp::P(2.0)) * lp_norm(&g, Lp::P(4.0))
        + lp_norm(&f, Lp::P(4.0)) * lp_norm(&riesz(&g, s)?, Lp::P(2.0));
    Ok(InequalityRecord::new("kato_ponce", lhs, rhs, descriptor.to_string()))
}

/// Largest Kato-Ponce ratio over the pairs `(f_i, f_{i+1})`.
pub fn check_kato_ponce(corpus: &Corpus, s: f64) -> Result<InequalityRecord> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let m = corpus.len();
    let mut worst = None;
    for i in 0..m {
        let j = (i + 1) % m;
        let desc = format!("f[{}] g[{}] s={s}", corpus.descriptors[i], corpus.descriptors[j]);
        keep_worst(&mut worst, kato_ponce_record(&corpus.fields[i], &corpus.fields[j], s, &desc)?);
    }
    worst.ok_or(Error::EmptyCorpus)
}

/// `‖u‖_{L⁴} / (‖u‖_{L²}^θ ‖u‖_{V^α}^{1-θ})`, largest over the corpus.
pub fn check_gagliardo_nirenberg(corpus: &Corpus, alpha: f64) -> Result<InequalityRecord> {
    let first = corpus.fields.first().ok_or(Error::EmptyCorpus)?;
    let th = theta(alpha, first.dim())?;
    let fine = refined(first.grid())?;
    let mut worst = None;
    for (f, d) in corpus.fields.iter().zip(&corpus.descriptors) {
        let lhs = lp_norm(&f.resample(&fine)?, Lp::P(4.0));
        let rhs = sobolev_norm(f, 0.0).powf(th) * sobolev_norm(f, alpha).powf(1.0 - th);
        keep_worst(&mut worst, InequalityRecord::new("gagliardo_nirenberg", lhs, rhs, d.clone()));
    }
    worst.ok_or(Error::EmptyCorpus)
}

/// Energy identity of a recorded run against the dissipation it implies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBudget {
    /// `max |½ dE/dt + ν‖v‖²_{V^α} - power|`.
    pub max_residual: f64,
    /// `max ν‖v‖²_{V^α}` over the record.
    pub dissipation_scale: f64,
    pub relative: f64,
    /// `‖v‖_{L²}` never increases between samples.
    pub monotone_decay: bool,
}

pub fn energy_budget(series: &ErrorSeries, nu: f64) -> EnergyBudget {
    let max_residual = series.energy_residual.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let dissipation_scale = series.v_valpha.iter().map(|x| nu * x * x).fold(0.0, f64::max);
    let monotone_decay = series.v_l2.windows(2).all(|w| w[1] <= w[0]);
    EnergyBudget {
        max_residual,
        dissipation_scale,
        relative: if dissipation_scale > 0.0 { max_residual / dissipation_scale } else { max_residual },
        monotone_decay,
    }
}

/// Fraction of the energy in modes with `max_j |k_j| > n/6`, the upper half
/// of the retained band.
pub fn tail_fraction(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let cut = grid.n() / 6;
    let (mut total, mut tail) = (0.0, 0.0);
    for idx in 0..grid.len() {
        let e: f64 = field.components().iter().map(|c| c[idx].norm_sqr()).sum();
        total += e;
        if grid.max_abs_component(idx) > cut {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementRow {
    pub n: usize,
    pub l2: f64,
    pub tail_fraction: f64,
    /// L² distance on shared modes to the next finer resolution.
    pub diff_to_next: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementTable {
    pub t: f64,
    pub rows: Vec<RefinementRow>,
}

impl RefinementTable {
    pub fn differences(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.diff_to_next).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.differences().windows(2).all(|w| w[1] < w[0])
    }

    /// Tail fraction at the finest resolution.
    pub fn accepted_tail(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.tail_fraction)
    }
}

/// Runs the reference system of `cfg` at each resolution from the same
/// initial data (built on the coarsest grid and carried over on shared
/// modes), then compares the solutions at `t_end` on shared modes.
/// Spin-up, if configured, is applied at each resolution.
pub fn galerkin_refinement(cfg: &RunConfig, resolutions: &[usize]) -> Result<RefinementTable> {
    let mut ns = resolutions.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let coarse_n = *ns.first().ok_or_else(|| Error::InvalidParameter("no resolutions given".into()))?;
    let coarse = TorusGrid::new(cfg.grid.dim, coarse_n)?;
    let fields = cfg.build_fields(&coarse)?;
    let p = PhysParams { mu: 0.0, ..cfg.phys_params() };
    let scfg = cfg.stepper_config();
    let mut solutions = Vec::with_capacity(ns.len());
    for &n in &ns {
        let grid = TorusGrid::new(cfg.grid.dim, n)?;
        let f = fields.f.resample(&grid)?;
        let mut u = fields.u0.resample(&grid)?;
        if cfg.spinup.duration > 0.0 {
            u = spin_up(&u, &f, &p, cfg.spinup_dt(), cfg.spinup.duration)?;
        }
        let stepper = Stepper::new(&grid, p, scfg)?;
        let mut state = SimState::new(0.0, Some(u), None, f)?;
        for _ in 0..scfg.steps() {
            state = stepper.step(&state)?;
        }
        solutions.push(state.u.expect("reference field"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (i, u) in solutions.iter().enumerate() {
        let diff_to_next = match solutions.get(i + 1) {
            Some(next) => {
                let grid = u.grid();
                Some((&u.resample(grid)? - &next.resample(grid)?).l2_norm())
            }
            None => None,
        };
        rows.push(RefinementRow {
            n: ns[i],
            l2: u.l2_norm(),
            tail_fraction: tail_fraction(u),
            diff_to_next,
        });
    }
    Ok(RefinementTable {
        t: scfg.t_end,
        rows,
    })
}

/// Zero-mean shear `A sin(2π k y) e_x`-type mode along axis 1, a steady
/// solution of the unforced Euler part.
pub fn shear_mode(grid: &Arc<TorusGrid>, k: i64, amplitude: f64) -> Result<SpectralField> {
    let mut kv = vec![0i64; grid.dim()];
    kv[1] = k;
    let mut amp = vec![Complex64::default(); grid.dim()];
    amp[0] = Complex64::new(0.0, -0.5 * amplitude);
    SpectralField::from_modes(grid, &[(kv, amp)])
}
