//! The ten acceptance criteria, each timed against its budget. One line per
//! criterion is printed; the test fails if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stokes_summa::moments::{kernel_closed_form, kernel_iterated_case1, kernel_iterated_case2};
use stokes_summa::pde::{classify, exact_sum, formal_solution, gevrey_estimate, truncated_solution_exact};
use stokes_summa::special::mittag_leffler;
use stokes_summa::stokes::{
    hyperfunction_pairing, jump_case2, jump_closed_form_case1, lateral_difference, lateral_sum, product_identity,
    shared_kernel, stokes_line, TranslateBorel,
};
use stokes_summa::transforms::{borel, k_sum, laplace, FnBorel, KSumOptions, SeriesBorel};
use stokes_summa::{CauchyProblem, CoverPoint, Direction, InitialDatum, QuadratureConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `Γ(1 + x)` for `x` a non-negative multiple of 1/2.
fn gamma_one_plus_half_multiple(x: f64) -> f64 {
    let twice = (2.0 * x).round() as u32;
    if twice.is_multiple_of(2) {
        factorial(twice / 2)
    } else {
        // Γ(m + 1/2) = (2m)! √π / (4^m m!) with m + 1/2 = 1 + x
        let m = twice / 2 + 1;
        factorial(2 * m) * PI.sqrt() / (4f64.powi(m as i32) * factorial(m))
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let ok = out.passed && in_time;
    println!(
        "criterion {id:>2} {}: {name}: {} ({:.2} s of {:.0} s)",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    ok
}

fn max_dev(devs: impl IntoIterator<Item = f64>) -> f64 {
    devs.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

fn criterion_1() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut devs = Vec::new();
    for k in [1.0, 2.0, 0.5] {
        let kp = kernel_closed_form(k).unwrap();
        for d in [0.0, PI / 4.0, PI] {
            for (modulus, offset) in [(0.5, 0.0), (1.3, 0.3)] {
                let t = CoverPoint::on_ray(modulus, d + offset * kp.half_opening());
                for n in 0..=6u32 {
                    let m = gamma_one_plus_half_multiple(n as f64 / k);
                    let expected = m * t.powf(n as f64);
                    let got = laplace(&kp, Direction(d), &FnBorel::monomial(n), t, &cfg);
                    devs.push(got.map_or(f64::INFINITY, |v| rel(v.value, expected)));
                }
            }
        }
    }
    let worst = max_dev(devs);
    Outcome {
        passed: worst <= 1e-7,
        detail: format!("max relative error {worst:.3e} (tol 1e-7)"),
    }
}

fn criterion_2() -> Outcome {
    let cfg = QuadratureConfig::default();
    let kp = kernel_closed_form(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_517);
    let shapes = [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0), (0, 0, 1), (0, 1, 1)];
    let mut devs = Vec::new();
    for i in 0..20 {
        let (p, q, r) = shapes[i % shapes.len()];
        let a = Complex64::from_polar(rng.gen_range(0.3..1.0), rng.gen_range(-PI..PI));
        let phi = if i % 2 == 0 {
            InitialDatum::polynomial((0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        } else {
            InitialDatum::exp(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        };
        let cp = CauchyProblem::new(p, q, r, a, phi).unwrap();
        let z = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let d = rng.gen_range(-PI..PI);
        let t = CoverPoint::on_ray(rng.gen_range(0.02..0.3), d + rng.gen_range(-0.5..0.5) * kp.half_opening());
        let b = borel(kp.moment(), &formal_solution(&cp));
        let v = SeriesBorel::new(&b, z, 240).unwrap();
        let opts = KSumOptions { window: 0.2, theta: None };
        let got = k_sum(&kp, Direction(d), &v, t, &opts, &cfg);
        let expected = exact_sum(&cp, t.to_complex(), z).unwrap();
        devs.push(got.map_or(f64::INFINITY, |e| (e.value - expected).norm()));
    }
    let worst = max_dev(devs);
    Outcome {
        passed: worst <= 1e-7,
        detail: format!("max error over 20 samples {worst:.3e} (tol 1e-7)"),
    }
}

fn criterion_3() -> Outcome {
    let cfg = QuadratureConfig::default();
    let cp = CauchyProblem::new(2, 0, 0, c(1.0, 0.0), InitialDatum::constant(1.0)).unwrap();
    let z = c(0.0, 0.0);
    let kp = shared_kernel(&cp).unwrap();
    let g = FnBorel::geometric(c(1.0, 0.0));
    let mut devs = Vec::new();
    for m in [0.1, 0.15, 0.2, 0.3] {
        let t = CoverPoint::on_ray(m, 0.0);
        let oracle = c(0.0, 2.0 * PI) * (-1.0 / m).exp() / m;
        let closed = jump_closed_form_case1(&cp, 0, t, z).map(|v| rel(v, oracle));
        let lateral = lateral_difference(&cp, Direction(0.0), 0.25, t, z, &cfg).map(|v| rel(v.value, oracle));
        let pairing = hyperfunction_pairing(&g, Direction(0.0), &kp, t, 0.25, &cfg).map(|v| rel(v.value, oracle));
        for r in [closed, lateral, pairing] {
            devs.push(r.unwrap_or(f64::INFINITY));
        }
    }
    let worst = max_dev(devs);
    Outcome {
        passed: worst <= 1e-4,
        detail: format!("max relative deviation from 2πi e^(-1/t)/t over three routes {worst:.3e} (tol 1e-4)"),
    }
}

fn criterion_4() -> Outcome {
    let worst = max_dev((0..=6).flat_map(|q| (0..=q).map(move |k| (product_identity(q, k) - (q + 1) as f64).norm())));
    Outcome {
        passed: worst <= 1e-12,
        detail: format!("max |product - (q+1)| {worst:.3e} (tol 1e-12)"),
    }
}

fn criterion_5() -> Outcome {
    let cfg = QuadratureConfig::default();
    let phi = InitialDatum::rational(c(1.0, 0.0), 1).unwrap();
    let cp = CauchyProblem::new(0, 0, 2, c(1.0, 0.0), phi).unwrap();
    let z = c(0.0, 0.0);
    let line = stokes_line(&cp, 0, z).unwrap();
    let kp = shared_kernel(&cp).unwrap();
    let other = TranslateBorel::new(&cp, z, 1).unwrap();
    let mut route = Vec::new();
    let mut leak = Vec::new();
    for m in [0.1, 0.15, 0.2] {
        let t = CoverPoint::on_ray(m, line.direction);
        let pairing = jump_case2(&cp, 0, t, z, None, &cfg);
        let lateral = lateral_difference(&cp, Direction(line.direction), 0.25, t, z, &cfg);
        route.push(match (pairing, lateral) {
            (Ok(p), Ok(l)) => rel(p.value.value, l.value),
            _ => f64::INFINITY,
        });
        leak.push(
            hyperfunction_pairing(&other, Direction(line.direction), &kp, t, 0.25, &cfg)
                .map_or(f64::INFINITY, |v| v.value.norm()),
        );
    }
    let (r, l) = (max_dev(route), max_dev(leak));
    Outcome {
        passed: r <= 1e-3 && l <= 1e-8,
        detail: format!("pairing vs lateral {r:.3e} (tol 1e-3), non-selected translate {l:.3e} (tol 1e-8)"),
    }
}

fn criterion_6() -> Outcome {
    let z = c(0.0, 0.0);
    let mut devs = Vec::new();
    let mut parts = Vec::new();
    for (p, q, r) in [(2, 0, 0), (3, 0, 0), (2, 1, 0), (0, 0, 2), (1, 0, 2)] {
        let phi = if r == 0 {
            InitialDatum::constant(1.0)
        } else {
            InitialDatum::rational(c(1.0, 0.0), 1).unwrap()
        };
        let cp = CauchyProblem::new(p, q, r, c(1.0, 0.0), phi).unwrap();
        // 1/k from the summability indices (q+1)/(p-1) and (q+1)/(p-1+r)
        let expected = if r == 0 { (p - 1) as f64 / (q + 1) as f64 } else { (p + r - 1) as f64 / (q + 1) as f64 };
        let est = gevrey_estimate(&formal_solution(&cp), z, 40).map(|g| g.order).unwrap_or(f64::NAN);
        assert_eq!(classify(&cp).gevrey_order(), expected);
        parts.push(format!("({p},{q},{r}): {est:.3}"));
        devs.push((est - expected).abs());
    }
    let worst = max_dev(devs);
    Outcome {
        passed: worst <= 0.1,
        detail: format!("{}; max deviation {worst:.3} (tol 0.1)", parts.join(", ")),
    }
}

fn criterion_7() -> Outcome {
    let cfg = QuadratureConfig::default();
    let cp = CauchyProblem::new(2, 0, 0, c(1.0, 0.0), InitialDatum::constant(1.0)).unwrap();
    let t = CoverPoint::on_ray(0.08, PI / 2.0);
    let u = match lateral_sum(&cp, Direction(PI / 2.0), t, c(0.0, 0.0), &cfg) {
        Ok(v) => v.value,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("sum failed: {e}"),
            }
        }
    };
    let tc = t.to_complex();
    let fitted = max_dev([4u32, 6, 8].iter().map(|&n| {
        let partial: Complex64 = (0..n).map(|j| factorial(j) * tc.powu(j)).sum();
        (u - partial).norm() / (factorial(n) * 0.08f64.powi(n as i32))
    }));
    Outcome {
        passed: fitted <= 10.0,
        detail: format!("fitted C = {fitted:.3} (bound 10)"),
    }
}

fn criterion_8() -> Outcome {
    let mut closed = Vec::new();
    for k in [1.0, 2.0, 0.5] {
        let kp = kernel_closed_form(k).unwrap();
        for u in [1.0, 2.0, 3.0] {
            let m = gamma_one_plus_half_multiple(u / k);
            closed.push(kp.mellin(u).map_or(f64::INFINITY, |v| (v.value.re - m).abs() / m));
        }
    }
    let iterated = kernel_iterated_case1(3, 0, Direction(0.0)).unwrap();
    let contour = kernel_iterated_case2(0, 0, 2, Direction(0.0)).unwrap();
    let mut it = Vec::new();
    let mut co = Vec::new();
    for u in [1u32, 2, 3] {
        let m_it = factorial(u).powi(2);
        let m_co = factorial(2 * u) / factorial(u);
        it.push(iterated.mellin(u as f64).map_or(f64::INFINITY, |v| (v.value.re - m_it).abs() / m_it));
        co.push(contour.mellin(u as f64).map_or(f64::INFINITY, |v| (v.value.re - m_co).abs() / m_co));
    }
    let (a, b, cc) = (max_dev(closed), max_dev(it), max_dev(co));
    Outcome {
        passed: a <= 1e-5 && b <= 1e-4 && cc <= 1e-4,
        detail: format!("closed {a:.3e} (tol 1e-5), iterated p=3 {b:.3e} (tol 1e-4), contour r=2 {cc:.3e} (tol 1e-4)"),
    }
}

type Bivariate = Vec<Vec<BigRational>>;

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// `∂_t u − (∂_t t)^p t^q ∂_z^r u` with `a = 1`, applied literally.
fn residual(p: u32, q: u32, r: u32, u: &Bivariate) -> Bivariate {
    let mut rhs: Bivariate = vec![Vec::new(); u.len() + q as usize];
    for (j, poly) in u.iter().enumerate() {
        let mut d = poly.clone();
        for _ in 0..r {
            d = d.iter().enumerate().skip(1).map(|(i, c)| c * int(i as i64)).collect();
        }
        rhs[j + q as usize] = d;
    }
    for _ in 0..p {
        // multiply by t, then differentiate in t
        let mut shifted: Bivariate = vec![Vec::new(); rhs.len() + 1];
        for (j, poly) in rhs.iter().enumerate() {
            shifted[j + 1] = poly.clone();
        }
        rhs = shifted
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, poly)| poly.iter().map(|c| c * int(j as i64)).collect())
            .collect();
    }
    let lhs: Bivariate = u.iter().enumerate().skip(1).map(|(j, poly)| poly.iter().map(|c| c * int(j as i64)).collect()).collect();
    (0..lhs.len())
        .map(|j| {
            let n = lhs[j].len().max(rhs.get(j).map_or(0, Vec::len));
            (0..n)
                .map(|i| {
                    let l = lhs[j].get(i).cloned().unwrap_or_else(BigRational::zero);
                    let r = rhs.get(j).and_then(|p| p.get(i)).cloned().unwrap_or_else(BigRational::zero);
                    l - r
                })
                .collect()
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    let mut failures = Vec::new();
    for p in 0..=3 {
        for q in 0..=2 {
            for r in 0..=3 {
                for degree in 0..=4usize {
                    let phi: Vec<BigRational> = (0..=degree)
                        .map(|_| int(rng.gen_range(-9..=9)) / int(rng.gen_range(1..=7)))
                        .collect();
                    let bound = 12;
                    let u = truncated_solution_exact(p, q, r, &BigRational::one(), &phi, bound);
                    let res = residual(p, q, r, &u);
                    // coefficients of t^j for j < bound − q involve only retained terms
                    let bad = res.iter().take(bound - q as usize).any(|poly| poly.iter().any(|c| !c.is_zero()));
                    if bad {
                        failures.push(format!("({p},{q},{r}) deg {degree}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Outcome {
        passed: failures.is_empty(),
        detail: format!("{checked} cases, {} with nonzero residual {}", failures.len(), failures.join(" ")),
    }
}

fn criterion_10() -> Outcome {
    let mut devs = Vec::new();
    for i in 0..10 {
        let z = Complex64::from_polar(0.3 + 0.9 * i as f64, -2.5 + 0.55 * i as f64);
        devs.push(mittag_leffler(1.0, z).map_or(f64::INFINITY, |v| rel(v, z.exp())));
        devs.push(mittag_leffler(2.0, z * z).map_or(f64::INFINITY, |v| rel(v, z.cosh())));
    }
    let worst = max_dev(devs);
    Outcome {
        passed: worst <= 1e-8,
        detail: format!("max relative error {worst:.3e} (tol 1e-8)"),
    }
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        run(1, "monomial Laplace identity", s(10), criterion_1),
        run(2, "Borel-Laplace roundtrip", s(30), criterion_2),
        run(3, "Euler jump, three routes", s(60), criterion_3),
        run(4, "product identity", s(1), criterion_4),
        run(5, "Case 2 route agreement", s(120), criterion_5),
        run(6, "Gevrey classification", s(10), criterion_6),
        run(7, "Gevrey asymptotics of the sum", s(30), criterion_7),
        run(8, "kernel Mellin integrity", s(180), criterion_8),
        run(9, "exact PDE residual", s(10), criterion_9),
        run(10, "Mittag-Leffler sanity", s(1), criterion_10),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
