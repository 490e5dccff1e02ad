//! Self-check suites run by `fracda verify`.
//!
//! Every check prints one line, `PASS <name> value=<v> tol=<t>` or
//! `FAIL ...`, and a suite fails if any of its checks does.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::diagnostics::{
    check_gagliardo_nirenberg, check_kato_ponce, check_trilinear_bounds, shear_mode, trilinear_skew,
    write_records_csv, Corpus, CorpusSpec, InequalityRecord,
};
use crate::error::{Error, Result};
use crate::field::{RandomFieldSpec, SpectralField};
use crate::grid::TorusGrid;
use crate::integrator::{SimState, Stepper, StepperConfig};
use crate::interp::{apply_interpolant, measure_interp_constant, InterpolantSpec};
use crate::params::PhysParams;
use crate::spectral::{fractional_symbol, inner_product, leray_project, lp_norm, nonlinear_term, sobolev_norm, trilinear, Lp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Core,
    Interp,
    Integrator,
    Inequalities,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Core, Suite::Interp, Suite::Integrator, Suite::Inequalities];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Core => "core",
            Self::Interp => "interp",
            Self::Integrator => "integrator",
            Self::Inequalities => "inequalities",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}' (core, interp, integrator, inequalities)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} value={:e} tol={:e}", self.name, self.value, self.tolerance)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Test hook: break the Hermitian symmetry of the reality-check fields.
    pub corrupt_reality: bool,
    /// Where the inequalities suite writes `inequalities.csv`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub records: Vec<InequalityRecord>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn below(&mut self, name: &str, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.to_string(),
            passed: value <= tolerance,
            value,
            tolerance,
        });
    }

    fn within(&mut self, name: &str, value: f64, lo: f64, hi: f64) {
        self.checks.push(Check {
            name: format!("{name} range=[{lo},{hi}]"),
            passed: value >= lo && value <= hi,
            value,
            tolerance: hi,
        });
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    match suite {
        Suite::Core => core_suite(&mut report, opts)?,
        Suite::Interp => interp_suite(&mut report)?,
        Suite::Integrator => integrator_suite(&mut report)?,
        Suite::Inequalities => inequalities_suite(&mut report, opts)?,
    }
    Ok(report)
}

fn random(grid: &Arc<TorusGrid>, seed: u64, slope: f64) -> SpectralField {
    SpectralField::random(
        grid,
        &RandomFieldSpec {
            slope,
            seed,
            ..Default::default()
        },
    )
}

/// Non-solenoidal field: the first component of a random field copied into all slots.
fn compressible(grid: &Arc<TorusGrid>, seed: u64) -> Result<SpectralField> {
    let base = random(grid, seed, 1.0).to_physical();
    let values = vec![base[0].clone(); grid.dim()];
    SpectralField::from_physical(grid, &values)
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Direct Galerkin convolution for `P_σ((a.∇)b)` on the retained band.
fn direct_nonlinear(a: &SpectralField, b: &SpectralField) -> Vec<Vec<Complex64>> {
    let grid = a.grid();
    let d = grid.dim();
    let kept: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_retained(i)).collect();
    let mut out = vec![vec![Complex64::default(); grid.len()]; d];
    for &pi in &kept {
        let p = grid.wavenumber(pi);
        for &qi in &kept {
            let q = grid.wavenumber(qi);
            let k: Vec<i64> = p.iter().zip(&q).map(|(x, y)| x + y).collect();
            let Some(ki) = grid.index_of(&k) else { continue };
            if ki == 0 || !grid.is_retained(ki) {
                continue;
            }
            let s: Complex64 = (0..d)
                .map(|j| a.component(j)[pi] * Complex64::new(0.0, 2.0 * PI * q[j] as f64))
                .sum();
            for i in 0..d {
                out[i][ki] += s * b.component(i)[qi];
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

fn core_suite(r: &mut VerifyReport, opts: &VerifyOptions) -> Result<()> {
    let g2 = TorusGrid::new(2, 16)?;
    let g3 = TorusGrid::new(3, 8)?;

    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        for g in [&g2, &g3] {
            let mut f = random(g, seed, 1.0);
            if opts.corrupt_reality && seed == 0 {
                f.corrupt_reality();
            }
            worst = worst.max(rel(f.reality_defect(), f.l2_norm()));
            let back = SpectralField::from_physical(g, &f.to_physical())?;
            worst = worst.max(rel(back.reality_defect(), back.l2_norm()));
        }
    }
    r.below("core.reality_symmetry", worst, 1e-12);

    let mut roundtrip: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    for seed in 0..10 {
        let f = random(&g2, seed, 1.0);
        let back = SpectralField::from_physical(&g2, &f.to_physical())?;
        roundtrip = roundtrip.max(rel((&back - &f).l2_norm(), f.l2_norm()));
        parseval = parseval.max((lp_norm(&f, Lp::P(2.0)) - sobolev_norm(&f, 0.0)).abs());
    }
    r.below("core.fft_roundtrip", roundtrip, 1e-13);
    r.below("core.parseval", parseval, 1e-13);

    let (mut idem, mut adj, mut div): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..10 {
        for g in [&g2, &g3] {
            let a = compressible(g, seed)?;
            let b = compressible(g, seed + 100)?;
            let pa = leray_project(&a);
            idem = idem.max(rel((&leray_project(&pa) - &pa).l2_norm(), a.l2_norm()));
            adj = adj.max(rel(
                (inner_product(&pa, &b)? - inner_product(&a, &leray_project(&b))?).abs(),
                a.l2_norm() * b.l2_norm(),
            ));
            div = div.max(rel(pa.divergence_defect(), a.l2_norm()));
        }
    }
    r.below("core.leray_idempotent", idem, 1e-12);
    r.below("core.leray_self_adjoint", adj, 1e-12);
    r.below("core.leray_divergence_free", div, 1e-12);

    let g8 = TorusGrid::new(2, 8)?;
    let mut conv: f64 = 0.0;
    for seed in 0..10 {
        let a = random(&g8, 2 * seed, 0.0);
        let b = random(&g8, 2 * seed + 1, 0.0);
        let got = nonlinear_term(&a, &b)?;
        let want = direct_nonlinear(&a, &b);
        let (mut num, mut den) = (0.0, 0.0);
        for (gc, wc) in got.components().iter().zip(&want) {
            for (x, y) in gc.iter().zip(wc) {
                num += (x - y).norm_sqr();
                den += y.norm_sqr();
            }
        }
        conv = conv.max(rel(num.sqrt(), den.sqrt()));
    }
    r.below("core.convolution_oracle", conv, 1e-10);

    let (mut symm2, mut symm1): (f64, f64) = (0.0, 0.0);
    for seed in 0..10 {
        for g in [&g2, &g3] {
            let u = random(g, 3 * seed, 1.0);
            let v = random(g, 3 * seed + 1, 1.0);
            let w = random(g, 3 * seed + 2, 1.0);
            let scale = sobolev_norm(&u, 0.0) * sobolev_norm(&v, 1.0) * sobolev_norm(&w, 0.0);
            symm2 = symm2.max(rel(trilinear(&u, &v, &v)?.abs(), scale));
            symm1 = symm1.max(rel((trilinear(&u, &v, &w)? + trilinear(&u, &w, &v)?).abs(), scale));
        }
    }
    r.below("core.trilinear_vanishes", symm2, 1e-12);
    r.below("core.trilinear_antisymmetric", symm1, 1e-12);

    let mut frac: f64 = 0.0;
    for idx in 0..g2.len() {
        let s = fractional_symbol(&g2, idx, 0.7) * fractional_symbol(&g2, idx, 0.3);
        let t = fractional_symbol(&g2, idx, 1.0);
        frac = frac.max(rel((s - t).abs(), t.max(1.0)));
    }
    r.below("core.fractional_symbol_composes", frac, 1e-12);
    Ok(())
}

fn interp_suite(r: &mut VerifyReport) -> Result<()> {
    let alpha = 1.25;
    let g = TorusGrid::new(2, 32)?;
    let corpus = Corpus::generate(
        &g,
        &CorpusSpec {
            size: 100,
            slopes: vec![0.5, 1.0, 2.0],
            kmax: None,
            seed: 40,
        },
    );
    let modal = InterpolantSpec::ModalProjection { cutoff: 4 };
    let c = measure_interp_constant(&modal, &corpus.fields, 0.0, alpha)?;
    r.below("interp.modal_constant_bound", c, (2.0 * PI).powf(-2.0 * alpha) + 1e-12);

    let band = Corpus::generate(
        &g,
        &CorpusSpec {
            size: 10,
            slopes: vec![1.0],
            kmax: Some(4),
            seed: 7,
        },
    );
    let mut idem: f64 = 0.0;
    for f in &band.fields {
        idem = idem.max(rel((&apply_interpolant(&modal, f)? - f).l2_norm(), f.l2_norm()));
    }
    r.below("interp.modal_identity_on_observed_band", idem, 1e-15);

    let single = shear_mode(&g, 5, 1.0)?;
    let got = measure_interp_constant(&modal, std::slice::from_ref(&single), 0.0, alpha)?;
    let want = (2.0 * PI * 5.0).powf(-2.0 * alpha) * 16.0;
    r.below("interp.single_mode_closed_form", rel((got - want).abs(), want), 1e-12);

    let fine = TorusGrid::new(2, 64)?;
    let coarse_band = Corpus::generate(
        &g,
        &CorpusSpec {
            size: 100,
            slopes: vec![1.0, 2.0],
            kmax: Some(8),
            seed: 90,
        },
    );
    let va = InterpolantSpec::VolumeAverage { cells: 4 };
    let c_n = measure_interp_constant(&va, &coarse_band.fields, 0.0, alpha)?;
    let c_2n = measure_interp_constant(&va, &coarse_band.resample(&fine)?.fields, 0.0, alpha)?;
    r.below("interp.volume_average_finite", if c_n.is_finite() && c_n > 0.0 { 0.0 } else { 1.0 }, 0.0);
    r.below("interp.volume_average_stable", rel((c_n - c_2n).abs(), c_n.max(c_2n)), 0.5);
    Ok(())
}

fn params(nu: f64, mu: f64, cutoff: usize) -> PhysParams {
    PhysParams {
        nu,
        alpha: 1.25,
        mu,
        interp: InterpolantSpec::ModalProjection { cutoff },
    }
}

fn integrator_suite(r: &mut VerifyReport) -> Result<()> {
    let g = TorusGrid::new(2, 16)?;
    let p = params(0.01, 0.0, 4);
    let dt = 1e-3;
    let u0 = shear_mode(&g, 3, 1.0)?;
    let stepper = Stepper::new(&g, p, StepperConfig::new(dt, 1.0))?.without_advection();
    let mut s = SimState::new(0.0, Some(u0.clone()), None, SpectralField::zeros(&g))?;
    for _ in 0..1000 {
        s = stepper.step(&s)?;
    }
    let lambda = p.nu * (2.0 * PI * 3.0f64).powf(2.0 * p.alpha);
    let want = u0.scale((-lambda * s.t).exp());
    let got = s.u.as_ref().expect("u");
    r.below("integrator.linear_decay_exact", rel((got - &want).l2_norm(), want.l2_norm()), 1e-13);

    let pn = params(0.01, 5.0, 4);
    let stepper = Stepper::new(&g, pn, StepperConfig::new(5e-3, 1.0))?;
    let f = shear_mode(&g, 2, 1.0)?;
    let mut s = SimState::new(0.0, Some(random(&g, 1, 1.0)), Some(random(&g, 2, 1.0)), f)?;
    for _ in 0..100 {
        s = stepper.step(&s)?;
    }
    let (u, v) = (s.u.as_ref().expect("u"), s.v.as_ref().expect("v"));
    let div = rel(u.divergence_defect(), u.l2_norm()).max(rel(v.divergence_defect(), v.l2_norm()));
    let reality = rel(u.reality_defect(), u.l2_norm()).max(rel(v.reality_defect(), v.l2_norm()));
    let mean = [u, v]
        .iter()
        .flat_map(|x| x.components().iter().map(|c| c[TorusGrid::MEAN_INDEX].norm()))
        .fold(0.0, f64::max);
    r.below("integrator.divergence_preserved", div, 1e-12);
    r.below("integrator.reality_preserved", reality, 1e-12);
    r.below("integrator.mean_preserved", mean, 1e-15);

    let order = self_convergence_order(&g, 0.0125, 0.1)?;
    r.within("integrator.self_convergence_order", order, 3.7, 4.3);
    Ok(())
}

/// Observed temporal order from runs with `dt`, `dt/2`, `dt/4` to `t_end`.
pub fn self_convergence_order(grid: &Arc<TorusGrid>, dt: f64, t_end: f64) -> Result<f64> {
    let p = params(0.01, 5.0, 4);
    let f = shear_mode(grid, 2, 2.0)?;
    let u0 = random(grid, 5, 1.0).scale(2.0);
    let v0 = SpectralField::zeros(grid);
    let mut finals = Vec::new();
    for k in 0..3 {
        let h = dt / f64::powi(2.0, k);
        let cfg = StepperConfig::new(h, t_end);
        let stepper = Stepper::new(grid, p, cfg)?;
        let mut s = SimState::new(0.0, Some(u0.clone()), Some(v0.clone()), f.clone())?;
        for _ in 0..cfg.steps() {
            s = stepper.step(&s)?;
        }
        finals.push(s);
    }
    let diff = |a: &SimState, b: &SimState| {
        let du = (a.u.as_ref().unwrap() - b.u.as_ref().unwrap()).l2_norm();
        let dv = (a.v.as_ref().unwrap() - b.v.as_ref().unwrap()).l2_norm();
        (du * du + dv * dv).sqrt()
    };
    Ok((diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2])).log2())
}

fn inequalities_suite(r: &mut VerifyReport, opts: &VerifyOptions) -> Result<()> {
    let alpha = 1.25;
    let g = TorusGrid::new(2, 24)?;
    let g2 = TorusGrid::new(2, 48)?;
    let spec = CorpusSpec {
        size: 30,
        slopes: vec![1.0, 2.0, 3.0],
        kmax: Some(7),
        seed: 21,
    };
    let corpus = Corpus::generate(&g, &spec);
    let fine = corpus.resample(&g2)?;

    let tri = check_trilinear_bounds(&corpus, alpha)?;
    let tri_fine = check_trilinear_bounds(&fine, alpha)?;
    for (a, b) in tri.iter().zip(&tri_fine) {
        r.below(&format!("inequalities.{}_finite", a.name), if a.is_finite() { 0.0 } else { 1.0 }, 0.0);
        r.below(&format!("inequalities.{}_stable", a.name), rel((a.ratio - b.ratio).abs(), a.ratio.max(b.ratio)), 0.5);
    }
    let u = &corpus.fields[0];
    let v = &corpus.fields[1];
    r.below("inequalities.trilinear_repeated_slot_zero", trilinear_skew(u, v, v)?.abs(), 0.0);

    let gn = check_gagliardo_nirenberg(&corpus, alpha)?;
    let gn_fine = check_gagliardo_nirenberg(&fine, alpha)?;
    r.below("inequalities.gagliardo_nirenberg_stable", rel((gn.ratio - gn_fine.ratio).abs(), gn.ratio.max(gn_fine.ratio)), 0.2);

    let kp0 = check_kato_ponce(&corpus, 0.0)?;
    r.below("inequalities.kato_ponce_holder_case", kp0.ratio, 1.0 + 1e-12);
    let kp = check_kato_ponce(&corpus, alpha)?;
    let kp_fine = check_kato_ponce(&fine, alpha)?;
    r.below("inequalities.kato_ponce_finite", if kp.is_finite() { 0.0 } else { 1.0 }, 0.0);
    r.below("inequalities.kato_ponce_stable", rel((kp.ratio - kp_fine.ratio).abs(), kp.ratio.max(kp_fine.ratio)), 0.5);

    r.records.extend(tri);
    r.records.push(gn);
    r.records.push(kp0);
    r.records.push(kp);
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
        let file = BufWriter::new(fs::File::create(dir.join("inequalities.csv"))?);
        write_records_csv(&r.records, file)?;
    }
    Ok(())
}
