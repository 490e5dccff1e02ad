//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs the shipped presets through the same harness the CLI uses, so the
//! numbers printed here are the ones `fracda run` would report.

mod common;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fracda_core::config::RunConfig;
use fracda_core::diagnostics::{energy_budget, shear_mode, Corpus, CorpusSpec};
use fracda_core::harness::{self, RunOptions, RunReport, SweepOptions};
use fracda_core::verify::self_convergence_order;
use fracda_core::{
    inner_product, leray_project, measure_interp_constant, nonlinear_term, sobolev_norm, trilinear, InterpolantSpec,
    PhysParams, RandomFieldSpec, SimState, SpectralField, Stepper, StepperConfig, TorusGrid,
};

use common::{convolution_oracle, relative_diff, rough_field};

fn preset(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(format!("{name}.toml"));
    RunConfig::load(&path, false).unwrap_or_else(|e| panic!("preset {name}: {e}"))
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

struct Suite {
    scratch: tempfile::TempDir,
    failures: usize,
    /// Reports of admissible runs, checked together by criterion 10.
    reports: Vec<(String, RunReport)>,
}

impl Suite {
    fn verdict(&mut self, id: &str, passed: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failures += 1;
        }
    }

    fn run(&mut self, name: &str) -> (RunReport, f64) {
        let cfg = preset(name);
        let opts = RunOptions {
            out_dir: self.scratch.path().join(name),
            quiet: true,
            ..Default::default()
        };
        let start = Instant::now();
        let summary = harness::execute(&cfg, &opts).unwrap_or_else(|e| panic!("{name}: {e}"));
        let wall = start.elapsed().as_secs_f64();
        if let Some(e) = &summary.failure {
            panic!("{name} stopped early: {e}");
        }
        if cfg.is_admissible() {
            self.reports.push((name.to_string(), summary.report.clone()));
        }
        (summary.report, wall)
    }
}

fn fmt_fit(d: &harness::DecaySummary) -> String {
    match (d.rate, d.r_squared, d.decades) {
        (Some(rate), Some(r2), Some(dec)) => format!("rate={rate:.4} r2={r2:.6} decades={dec:.2}"),
        _ => "no decay window".into(),
    }
}

fn criteria_1_2(s: &mut Suite) {
    let (r, wall) = s.run("thm_l2_2d");
    let t = r.threshold.as_ref().expect("threshold report");
    let l2 = &r.decay_l2;
    let ok1 = t.h_condition_ok
        && l2.decays_with(0.99)
        && l2.decades.is_some_and(|d| d >= 6.0)
        && wall <= 120.0;
    s.verdict(
        "1",
        ok1,
        format!(
            "2D L2 synchronization {} mu*h^2*c0={:.3e}<=nu={:e} wall={wall:.1}s (limit 120s)",
            fmt_fit(l2),
            t.h_condition_lhs,
            t.nu
        ),
    );
    let va = &r.decay_valpha;
    let floor_ratio = match (va.floor, l2.floor) {
        (Some(a), Some(b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    };
    s.verdict(
        "2",
        va.decays_with(0.99) && floor_ratio <= 1e3,
        format!("V^alpha synchronization {} floor ratio={floor_ratio:.2e} (limit 1e3)", fmt_fit(va)),
    );
}

fn criterion_3(s: &mut Suite) {
    let (r, wall) = s.run("thm_3d");
    let d = &r.decay_l2;
    s.verdict(
        "3",
        d.decays_with(0.98) && wall <= 900.0,
        format!("3D alpha=5/4 n=32 N_c=8 {} wall={wall:.1}s (limit 900s)", fmt_fit(d)),
    );
}

fn criterion_4(s: &mut Suite) {
    let (r, _) = s.run("control_mu0");
    let dir = s.scratch.path().join("control_mu0");
    let series =
        fracda_core::ErrorSeries::read_csv(std::fs::File::open(dir.join("series.csv")).unwrap()).unwrap();
    let e0 = series.l2_err[0];
    let min = series.l2_err.iter().copied().fold(f64::INFINITY, f64::min);
    s.verdict(
        "4a",
        min >= 0.1 * e0 && !r.decay_l2.decays_with(0.9),
        format!("mu=0 control min|w|/|w0|={:.3} (limit >=0.1)", min / e0),
    );

    let cfg = preset("h_sweep");
    let axes = vec![("param".to_string(), vec![12.0, 1.0])];
    let opts = SweepOptions {
        out_dir: s.scratch.path().join("h_sweep"),
        threads: Some(1),
        strict_admissibility: false,
    };
    let summary = harness::sweep(&cfg, &axes, &opts).expect("h sweep");
    let mut violating = 0;
    let mut ok = true;
    let mut parts = Vec::new();
    for row in &summary.rows {
        let rep = row.report.as_ref().expect("sweep row report");
        let t = rep.threshold.as_ref().expect("threshold");
        let d = &rep.decay_l2;
        if t.h_condition_lhs > 4.0 * t.nu {
            violating += 1;
            ok &= !d.found || d.r_squared.is_some_and(|r2| r2 < 0.9);
        } else if t.h_condition_ok {
            ok &= d.decays_with(0.99);
        }
        parts.push(format!("N_c={} mu*h^2*c0/nu={:.2} {}", row.params[0], t.h_condition_lhs / t.nu, fmt_fit(d)));
        s.reports.push((format!("h_sweep[{}]", row.index), rep.clone()));
    }
    s.verdict("4b", ok && violating > 0, format!("h-violation sweep: {}", parts.join("; ")));

    let cfg = preset("mu_sweep");
    let axes = harness::merge_axes(&cfg, &[]);
    let opts = SweepOptions {
        out_dir: s.scratch.path().join("mu_sweep"),
        threads: Some(1),
        strict_admissibility: false,
    };
    let summary = harness::sweep(&cfg, &axes, &opts).expect("mu sweep");
    let rates: Vec<f64> = summary
        .rows
        .iter()
        .map(|row| {
            let rep = row.report.as_ref().expect("sweep row report");
            s.reports.push((format!("mu_sweep[{}]", row.index), rep.clone()));
            rep.decay_l2.rate.filter(|_| rep.decay_l2.found).unwrap_or(0.0).max(0.0)
        })
        .collect();
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]) && rates.last().is_some_and(|&r| r > 0.0);
    s.verdict("4c", monotone, format!("mu sweep {{0,4,16}} rates={rates:.4?} nondecreasing"));
}

fn criterion_5(s: &mut Suite) {
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        let grid = TorusGrid::new(d, 8).unwrap();
        for seed in 0..50 {
            let a = rough_field(&grid, 1000 + 2 * seed);
            let b = rough_field(&grid, 1001 + 2 * seed);
            let got = nonlinear_term(&a, &b).unwrap();
            worst = worst.max(relative_diff(&got, &convolution_oracle(&a, &b)));
        }
    }
    s.verdict(
        "5",
        worst <= 1e-10,
        format!("B(a,b) vs convolution sum on 8^2 and 8^3, 100 pairs: max rel={worst:.2e} (limit 1e-10)"),
    );
}

fn random(grid: &Arc<TorusGrid>, seed: u64) -> SpectralField {
    SpectralField::random(
        grid,
        &RandomFieldSpec {
            slope: 1.0,
            seed,
            ..Default::default()
        },
    )
}

fn criterion_6(s: &mut Suite) {
    let g2 = TorusGrid::new(2, 16).unwrap();
    let g3 = TorusGrid::new(3, 8).unwrap();
    let (mut symm2, mut symm1, mut idem, mut adj, mut reality, mut div): (f64, f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for seed in 0..50u64 {
        let g = if seed % 2 == 0 { &g2 } else { &g3 };
        let u = random(g, 3 * seed);
        let v = random(g, 3 * seed + 1);
        let w = random(g, 3 * seed + 2);
        let scale = sobolev_norm(&u, 0.0) * sobolev_norm(&v, 1.0) * sobolev_norm(&w, 1.0);
        symm2 = symm2.max(rel(trilinear(&u, &v, &v).unwrap().abs(), scale));
        symm1 = symm1.max(rel(
            (trilinear(&u, &v, &w).unwrap() + trilinear(&u, &w, &v).unwrap()).abs(),
            scale,
        ));

        let a = rough_field(g, 500 + seed);
        let b = rough_field(g, 600 + seed);
        let pa = leray_project(&a);
        idem = idem.max(rel((&leray_project(&pa) - &pa).l2_norm(), a.l2_norm()));
        adj = adj.max(rel(
            (inner_product(&pa, &b).unwrap() - inner_product(&a, &leray_project(&b)).unwrap()).abs(),
            a.l2_norm() * b.l2_norm(),
        ));

        let back = SpectralField::from_physical(g, &u.to_physical()).unwrap();
        reality = reality.max(rel(u.reality_defect(), u.l2_norm())).max(rel(back.reality_defect(), back.l2_norm()));
    }
    let g = TorusGrid::new(2, 16).unwrap();
    let p = PhysParams {
        nu: 0.01,
        alpha: 1.25,
        mu: 5.0,
        interp: InterpolantSpec::ModalProjection { cutoff: 4 },
    };
    let stepper = Stepper::new(&g, p, StepperConfig::new(5e-3, 0.5)).unwrap();
    let f = shear_mode(&g, 2, 1.0).unwrap();
    for seed in 0..50u64 {
        let mut st =
            SimState::new(0.0, Some(random(&g, 700 + seed)), Some(random(&g, 800 + seed)), f.clone()).unwrap();
        for _ in 0..100 {
            st = stepper.step(&st).unwrap();
        }
        for x in [st.u.as_ref().unwrap(), st.v.as_ref().unwrap()] {
            div = div.max(rel(x.divergence_defect(), x.l2_norm()));
            reality = reality.max(rel(x.reality_defect(), x.l2_norm()));
        }
    }
    let worst = [symm2, symm1, idem, adj, reality, div].into_iter().fold(0.0, f64::max);
    s.verdict(
        "6",
        worst <= 1e-12,
        format!(
            "structural identities over 50 fields: b(u,v,v)={symm2:.1e} antisym={symm1:.1e} P^2-P={idem:.1e} \
             P*-P={adj:.1e} reality={reality:.1e} div(100 steps)={div:.1e} (limit 1e-12)"
        ),
    );
}

fn criterion_7(s: &mut Suite) {
    let g = TorusGrid::new(2, 16).unwrap();
    let p = PhysParams {
        nu: 0.01,
        alpha: 1.25,
        mu: 0.0,
        interp: InterpolantSpec::ModalProjection { cutoff: 4 },
    };
    let k = [2i64, 3];
    let k_abs = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
    let u0 = SpectralField::from_modes(
        &g,
        &[(k.to_vec(), vec![num_complex::Complex64::new(0.3, -0.2), num_complex::Complex64::new(-0.2, 0.4 / 3.0)])],
    )
    .unwrap();
    let u0 = leray_project(&u0);
    let dt = 1e-3;
    let stepper = Stepper::new(&g, p, StepperConfig::new(dt, 1.0)).unwrap().without_advection();
    let mut st = SimState::new(0.0, Some(u0.clone()), None, SpectralField::zeros(&g)).unwrap();
    for _ in 0..1000 {
        st = stepper.step(&st).unwrap();
    }
    let want = u0.scale((-p.nu * (2.0 * PI * k_abs).powf(2.0 * p.alpha) * st.t).exp());
    let err = rel((st.u.as_ref().unwrap() - &want).l2_norm(), want.l2_norm());
    let order = self_convergence_order(&g, 0.0125, 0.1).unwrap();
    s.verdict(
        "7",
        err <= 1e-13 && (3.7..=4.3).contains(&order),
        format!("linear single-mode rel err after 1000 steps={err:.2e} (limit 1e-13); self-convergence order={order:.3} (range 3.7-4.3)"),
    );
}

fn criterion_8(s: &mut Suite) {
    let cfg = preset("energy_budget");
    let (_, _) = s.run("energy_budget");
    let dir = s.scratch.path().join("energy_budget");
    let series =
        fracda_core::ErrorSeries::read_csv(std::fs::File::open(dir.join("series.csv")).unwrap()).unwrap();
    let b = energy_budget(&series, cfg.phys.nu);
    s.verdict(
        "8",
        b.relative <= 1e-6 && b.monotone_decay,
        format!(
            "energy identity residual/dissipation={:.2e} (limit 1e-6) monotone={}",
            b.relative, b.monotone_decay
        ),
    );
}

fn criterion_9(s: &mut Suite) {
    let alpha = 1.25;
    let g = TorusGrid::new(2, 32).unwrap();
    let corpus = Corpus::generate(
        &g,
        &CorpusSpec {
            size: 100,
            slopes: vec![0.5, 1.0, 2.0],
            kmax: None,
            seed: 77,
        },
    );
    let mut modal_worst: f64 = 0.0;
    for cutoff in [2, 4, 8] {
        let c = measure_interp_constant(&InterpolantSpec::ModalProjection { cutoff }, &corpus.fields, 0.0, alpha)
            .unwrap();
        modal_worst = modal_worst.max(c);
    }
    let bound = (2.0 * PI).powf(-2.0 * alpha) + 1e-12;

    let band = Corpus::generate(
        &g,
        &CorpusSpec {
            size: 100,
            slopes: vec![1.0, 2.0],
            kmax: Some(8),
            seed: 78,
        },
    );
    let fine = band.resample(&TorusGrid::new(2, 64).unwrap()).unwrap();
    let va = InterpolantSpec::VolumeAverage { cells: 4 };
    let c_n = measure_interp_constant(&va, &band.fields, 0.0, alpha).unwrap();
    let c_2n = measure_interp_constant(&va, &fine.fields, 0.0, alpha).unwrap();
    let drift = rel((c_n - c_2n).abs(), c_n.max(c_2n));
    s.verdict(
        "9",
        modal_worst <= bound && c_n.is_finite() && c_n > 0.0 && drift <= 0.5,
        format!(
            "modal c0={modal_worst:.3e} (bound {bound:.3e}); volume-average c0 n=32 {c_n:.3e} n=64 {c_2n:.3e} drift={drift:.3} (limit 0.5)"
        ),
    );
}

fn criterion_10(s: &mut Suite) {
    let (r, _) = s.run("absorbing_ball");
    let ball = r.absorbing_ball;
    let ball_ok = ball.enabled && ball.holds && ball.checked > 0 && ball.t0.is_some_and(|t| t > 0.0);
    let (_, _) = s.run("sanity_identity");
    let unbounded: Vec<&str> = s.reports.iter().filter(|(_, r)| !r.bounds.bounded).map(|(n, _)| n.as_str()).collect();
    s.verdict(
        "10",
        ball_ok && unbounded.is_empty(),
        format!(
            "uniform bounds on {} admissible runs (unbounded: {unbounded:?}); absorbing ball M={:.3e} t0={:.3} \
             checked={} max |v|^2/R^2={:.3}",
            s.reports.len(),
            ball.m,
            ball.t0.unwrap_or(f64::NAN),
            ball.checked,
            ball.max_ratio.unwrap_or(f64::NAN)
        ),
    );
}

fn main() -> ExitCode {
    let mut s = Suite {
        scratch: tempfile::tempdir().expect("scratch dir"),
        failures: 0,
        reports: Vec::new(),
    };
    let start = Instant::now();
    criterion_5(&mut s);
    criterion_6(&mut s);
    criterion_7(&mut s);
    criterion_8(&mut s);
    criterion_9(&mut s);
    criteria_1_2(&mut s);
    criterion_3(&mut s);
    criterion_4(&mut s);
    criterion_10(&mut s);
    println!(
        "acceptance: {} failure(s), {:.1}s total",
        s.failures,
        start.elapsed().as_secs_f64()
    );
    if s.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
