use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use stokes_summa::moments::{kernel_closed_form, kernel_iterated_case1, kernel_iterated_case2};
use stokes_summa::pde::{exact_sum, formal_solution};
use stokes_summa::transforms::{borel, k_sum, laplace, FnBorel, KSumOptions, SeriesBorel};
use stokes_summa::{CauchyProblem, CoverPoint, Direction, InitialDatum, KernelPair, QuadratureConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn constructible() -> Vec<(&'static str, KernelPair)> {
    let d = Direction(0.0);
    vec![
        ("closed k=1/3", kernel_closed_form(1.0 / 3.0).unwrap()),
        ("case 1 p=3 q=0", kernel_iterated_case1(3, 0, d).unwrap()),
        ("case 1 p=4 q=0", kernel_iterated_case1(4, 0, d).unwrap()),
        ("case 1 p=3 q=1", kernel_iterated_case1(3, 1, d).unwrap()),
        ("case 2 p=2 r=2", kernel_iterated_case2(2, 0, 2, d).unwrap()),
        ("contour p=0 r=2", kernel_iterated_case2(0, 0, 2, d).unwrap()),
        ("contour p=0 r=3 q=1", kernel_iterated_case2(0, 1, 3, d).unwrap()),
    ]
}

#[test]
fn mellin_identity_for_constructible_kernels() {
    for (name, kp) in constructible() {
        assert!(kp.depth() <= 2, "{name}");
        for u in [0.5, 1.0, 2.0, 3.5] {
            let m = kp.moment().eval(u);
            let got = kp.mellin(u).unwrap().value.re;
            assert!((got - m).abs() <= 1e-6 * m, "{name} u={u}: {got} vs {m}");
        }
    }
}

#[test]
fn kernels_are_flat_inside_their_sector() {
    for (name, kp) in constructible() {
        let h = kp.half_opening();
        let phis = [-(h - 0.1).min(3.0), 0.0, (h - 0.1).min(3.0)];
        for phi in phis {
            let fl = kp.flatness(phi).unwrap();
            for i in 0..40 {
                let x = 0.05 * 1.25f64.powi(i);
                let v = match kp.e(CoverPoint::on_ray(x, phi)) {
                    Ok(v) => v.norm(),
                    Err(_) => continue,
                };
                assert!(v <= fl.bound(x) * (1.0 + 1e-6) + 1e-300, "{name} phi={phi} x={x}: {v} > {}", fl.bound(x));
            }
        }
    }
}

#[test]
fn big_e_matches_its_series_for_iterated_kernels() {
    for (name, kp) in constructible() {
        for z in [c(0.5, 0.0), c(-1.2, 0.7), c(0.0, 2.0)] {
            let series: Complex64 = (0..200).map(|n| z.powu(n) / kp.moment().eval(n as f64)).sum();
            let got = kp.big_e(z).unwrap();
            assert!((got - series).norm() <= 1e-8 * series.norm(), "{name} z={z}: {got} vs {series}");
        }
    }
}

#[test]
fn reported_quadrature_errors_are_honest() {
    let loose = QuadratureConfig::default().with_abs_tol(1e-7).with_rel_tol(1e-7);
    let tight = QuadratureConfig::default().with_abs_tol(1e-8).with_rel_tol(1e-8);
    let mut cases = 0;
    let mut honest = 0;
    for k in [0.5, 1.0, 2.0] {
        let kp = kernel_closed_form(k).unwrap();
        for (i, g) in [
            FnBorel::geometric(c(0.0, 1.0)),
            FnBorel::geometric(c(-0.8, 0.3)),
            FnBorel::monomial(3),
            FnBorel::geometric(Complex64::from_polar(0.7, 2.0)),
        ]
        .iter()
        .enumerate()
        {
            for m in [0.2, 0.6, 1.1] {
                let d = 0.1 * i as f64;
                let t = CoverPoint::on_ray(m, d + 0.2 * kp.half_opening());
                let a = laplace(&kp, Direction(d), g, t, &loose).unwrap();
                let b = laplace(&kp, Direction(d), g, t, &tight).unwrap();
                cases += 1;
                if a.error >= (a.value - b.value).norm() {
                    honest += 1;
                }
            }
        }
    }
    assert!(honest as f64 >= 0.95 * cases as f64, "{honest} of {cases} honest");
}

fn datum() -> impl Strategy<Value = InitialDatum> {
    prop_oneof![
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5)
            .prop_map(|v| InitialDatum::polynomial(v.into_iter().map(|(a, b)| c(a, b)).collect())),
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| InitialDatum::exp(c(a, b))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_kernel_big_e_matches_series(k in 0.3..3.0f64, m in 0.0..2.0f64, arg in -PI..PI) {
        let kp = kernel_closed_form(k).unwrap();
        let z = Complex64::from_polar(m, arg);
        let series: Complex64 = (0..400).map(|n| z.powu(n) / kp.moment().eval(n as f64)).sum();
        let got = kp.big_e(z).unwrap();
        prop_assert!((got - series).norm() <= 1e-8 * series.norm().max(1.0));
    }

    #[test]
    fn borel_laplace_roundtrip(
        shape in 0usize..6,
        a_mod in 0.3..1.0f64,
        a_arg in -PI..PI,
        phi in datum(),
        d in -PI..PI,
        offset in -0.5..0.5f64,
        m in 0.02..0.3f64,
    ) {
        let (p, q, r) = [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0), (0, 0, 1), (0, 2, 1)][shape];
        let cp = CauchyProblem::new(p, q, r, Complex64::from_polar(a_mod, a_arg), phi).unwrap();
        let kp = kernel_closed_form(1.0).unwrap();
        let z = c(0.2, -0.1);
        let t = CoverPoint::on_ray(m, d + offset * kp.half_opening());
        let v = SeriesBorel::new(&borel(kp.moment(), &formal_solution(&cp)), z, 240).unwrap();
        let opts = KSumOptions { window: 0.2, theta: None };
        let got = k_sum(&kp, Direction(d), &v, t, &opts, &QuadratureConfig::default()).unwrap().value;
        let expected = exact_sum(&cp, t.to_complex(), z).unwrap();
        prop_assert!((got - expected).norm() <= 1e-7, "{got} vs {expected}");
    }

    #[test]
    fn monomial_identity(k in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0]), n in 0u32..=6, d in -PI..PI, m in 0.1..2.0f64) {
        let kp = kernel_closed_form(k).unwrap();
        let t = CoverPoint::on_ray(m, d + 0.3 * kp.half_opening());
        let got = laplace(&kp, Direction(d), &FnBorel::monomial(n), t, &QuadratureConfig::default()).unwrap().value;
        let expected = kp.moment().eval(n as f64) * t.powf(n as f64);
        prop_assert!((got - expected).norm() <= 1e-7 * expected.norm());
    }
}
