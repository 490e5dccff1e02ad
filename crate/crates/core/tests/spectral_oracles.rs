mod common;

use std::f64::consts::PI;

use fracda_core::{
    fractional_laplacian, inner_product, leray_project, lp_norm, nonlinear_term, sobolev_norm, Lp, RandomFieldSpec,
    SpectralField, TorusGrid,
};
use num_complex::Complex64;
use proptest::prelude::*;

use common::{convolution_oracle, relative_diff, rough_field};

#[test]
fn nonlinear_term_matches_convolution_sum_2d_and_3d() {
    for d in [2, 3] {
        let grid = TorusGrid::new(d, 8).unwrap();
        for seed in 0..10 {
            let a = rough_field(&grid, 2 * seed);
            let b = SpectralField::random(&grid, &RandomFieldSpec { slope: 0.0, seed: 2 * seed + 1, ..Default::default() });
            let got = nonlinear_term(&a, &b).unwrap();
            let want = convolution_oracle(&a, &b);
            assert!(relative_diff(&got, &want) < 1e-10, "d={d} seed={seed}");
            assert!(got.is_mean_free() && got.is_div_free());
            assert_eq!(got.reality_defect(), 0.0);
        }
    }
}

#[test]
fn taylor_green_advection_is_a_gradient() {
    let grid = TorusGrid::new(2, 8).unwrap();
    let tg = SpectralField::taylor_green(&grid, 1.0).unwrap();
    let unprojected = {
        // oracle without the projection step
        let d = 2;
        let retained: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_retained(i)).collect();
        let mut out = vec![vec![Complex64::default(); grid.len()]; d];
        for &pi in &retained {
            let p = grid.wavenumber(pi);
            for &qi in &retained {
                let q = grid.wavenumber(qi);
                let k: Vec<i64> = p.iter().zip(&q).map(|(x, y)| x + y).collect();
                let Some(ki) = grid.index_of(&k) else { continue };
                let adotq: Complex64 = (0..d)
                    .map(|j| tg.component(j)[pi] * Complex64::new(0.0, 2.0 * PI * q[j] as f64))
                    .sum();
                for i in 0..d {
                    out[i][ki] += adotq * tg.component(i)[qi];
                }
            }
        }
        out
    };
    // parallel to k at every mode: k x c = 0
    for idx in 0..grid.len() {
        let k = grid.wavenumber(idx);
        let cross = unprojected[0][idx] * k[1] as f64 - unprojected[1][idx] * k[0] as f64;
        assert!(cross.norm() < 1e-14);
    }
    assert!(unprojected[0].iter().any(|z| z.norm() > 0.1));
    assert!(nonlinear_term(&tg, &tg).unwrap().l2_norm() < 1e-14);
}

#[test]
fn sobolev_norm_matches_quadrature() {
    let grid = TorusGrid::new(2, 16).unwrap();
    for seed in 0..5 {
        let u = rough_field(&grid, seed);
        let phys = u.to_physical();
        let quad: f64 = (0..grid.len())
            .map(|i| phys.iter().map(|c| c[i] * c[i]).sum::<f64>())
            .sum::<f64>()
            / grid.len() as f64;
        let spec = sobolev_norm(&u, 0.0).powi(2);
        assert!((quad - spec).abs() < 1e-10 * spec);
        assert!((lp_norm(&u, Lp::P(2.0)) - spec.sqrt()).abs() < 1e-12 * spec.sqrt());
    }
}

#[test]
fn inner_product_matches_quadrature() {
    let grid = TorusGrid::new(3, 8).unwrap();
    let a = rough_field(&grid, 1);
    let b = rough_field(&grid, 2);
    let (pa, pb) = (a.to_physical(), b.to_physical());
    let quad: f64 = (0..grid.len())
        .map(|i| (0..3).map(|c| pa[c][i] * pb[c][i]).sum::<f64>())
        .sum::<f64>()
        / grid.len() as f64;
    let spec = inner_product(&a, &b).unwrap();
    assert!((quad - spec).abs() < 1e-12 * quad.abs().max(1.0));
}

#[test]
fn l4_norm_matches_refined_quadrature() {
    let coarse = TorusGrid::new(2, 24).unwrap();
    let fine = TorusGrid::new(2, 48).unwrap();
    for seed in 0..4 {
        // |u|^4 has band 4*kmax, resolved exactly on both grids
        let u = SpectralField::random(&coarse, &RandomFieldSpec { slope: 1.0, kmax: Some(5), seed, ..Default::default() });
        let refined = u.resample(&fine).unwrap();
        let phys = refined.to_physical();
        let quad = ((0..fine.len())
            .map(|i| (phys[0][i] * phys[0][i] + phys[1][i] * phys[1][i]).powi(2))
            .sum::<f64>()
            / fine.len() as f64)
            .powf(0.25);
        let got = lp_norm(&u, Lp::P(4.0));
        assert!((got - quad).abs() < 1e-8 * quad, "{got} vs {quad}");
    }
}

#[test]
fn poincare_inequality() {
    let lambda1 = 4.0 * PI * PI;
    for d in [2, 3] {
        let grid = TorusGrid::new(d, 12).unwrap();
        for seed in 0..20 {
            let u = SpectralField::random(&grid, &RandomFieldSpec { slope: 1.0 + seed as f64 * 0.1, seed, ..Default::default() });
            for alpha in [1.0, 1.25, 1.5] {
                let lhs = lambda1.powf(alpha) * sobolev_norm(&u, 0.0).powi(2);
                let rhs = sobolev_norm(&u, alpha).powi(2);
                assert!(lhs <= rhs * (1.0 + 1e-14));
            }
        }
    }
}

fn random_pair() -> impl Strategy<Value = (u64, u64, f64)> {
    (0u64..1000, 0u64..1000, 0.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(32) })]

    #[test]
    fn leray_is_idempotent_and_self_adjoint((s1, s2, _slope) in random_pair()) {
        let grid = TorusGrid::new(2, 12).unwrap();
        let a = rough_field(&grid, s1);
        let b = rough_field(&grid, s2);
        let pa = leray_project(&a);
        let ppa = leray_project(&pa);
        prop_assert!((&ppa - &pa).l2_norm() <= 1e-14 * pa.l2_norm());
        let lhs = inner_product(&pa, &b).unwrap();
        let rhs = inner_product(&a, &leray_project(&b)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * a.l2_norm() * b.l2_norm());
        prop_assert_eq!(pa.reality_defect(), 0.0);
        prop_assert!(pa.divergence_defect() <= 1e-12 * pa.l2_norm());
    }

    #[test]
    fn fractional_powers_compose((seed, _s2, slope) in random_pair(), s in -1.0f64..1.5, t in -1.0f64..1.5) {
        let grid = TorusGrid::new(2, 12).unwrap();
        let u = SpectralField::random(&grid, &RandomFieldSpec { slope, seed, ..Default::default() });
        let two = fractional_laplacian(&fractional_laplacian(&u, s).unwrap(), t).unwrap();
        let one = fractional_laplacian(&u, s + t).unwrap();
        prop_assert!((&two - &one).l2_norm() <= 1e-12 * one.l2_norm());
    }

    #[test]
    fn sobolev_norm_is_monotone_in_s((seed, _s2, slope) in random_pair(), s in -1.0f64..2.0, ds in 0.0f64..1.0) {
        let grid = TorusGrid::new(2, 12).unwrap();
        let u = SpectralField::random(&grid, &RandomFieldSpec { slope, seed, ..Default::default() });
        prop_assert!(sobolev_norm(&u, s) <= sobolev_norm(&u, s + ds) * (1.0 + 1e-14));
    }

    #[test]
    fn trilinear_identities((s1, s2, _slope) in random_pair(), s3 in 0u64..1000) {
        let grid = TorusGrid::new(2, 12).unwrap();
        let spec = |seed| RandomFieldSpec { slope: 1.0, seed, ..Default::default() };
        let a = SpectralField::random(&grid, &spec(s1));
        let b = SpectralField::random(&grid, &spec(s2 + 1000));
        let c = SpectralField::random(&grid, &spec(s3 + 2000));
        let bab = inner_product(&nonlinear_term(&a, &b).unwrap(), &b).unwrap();
        let scale = inner_product(&nonlinear_term(&a, &b).unwrap(), &nonlinear_term(&a, &b).unwrap()).unwrap().sqrt();
        prop_assert!(bab.abs() <= 1e-12 * scale.max(1.0));
        let abc = inner_product(&nonlinear_term(&a, &b).unwrap(), &c).unwrap();
        let acb = inner_product(&nonlinear_term(&a, &c).unwrap(), &b).unwrap();
        prop_assert!((abc + acb).abs() <= 1e-12 * (abc.abs() + acb.abs()).max(1.0));
    }
}
