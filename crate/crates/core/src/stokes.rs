//! Stokes and anti-Stokes lines, lateral sums, and jumps computed three ways:
//! closed form, hyperfunction pairing, and lateral differences.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CoverPoint, Direction};
use crate::moments::KernelPair;
use crate::pde::{case2_translate, classify, regime_kernel, CauchyProblem, ProblemBorel, RegimeTag};
use crate::quadrature::{Estimate, QuadratureConfig};
use crate::transforms::{laplace, ray_integral, BorelFunction, RayQuadratureSpec, NEGLIGIBLE_LN};

/// Default lateral offset of `d±` from a Stokes line.
pub const DEFAULT_EPS: f64 = 0.25;

/// `|z − z0| / |z0|` below which Case 2 lines are reported as ill-conditioned.
pub const CONDITIONING_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case")]
pub enum LineOrigin {
    /// `d_k = (2kπ − arg a)/(q+1)`.
    Case1 { index: i64 },
    /// `δ_l = (rθ_z − 2πl − arg a)/(q+1)`, `θ_z = arg(z0 − z)`.
    Case2 { index: i64, base: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StokesLine {
    /// Direction on the universal cover.
    pub direction: f64,
    pub origin: LineOrigin,
    pub k_sum: f64,
}

impl StokesLine {
    /// The anti-Stokes companions `direction ∓ π/(2k)`.
    pub fn anti_stokes(&self) -> [f64; 2] {
        let h = PI / (2.0 * self.k_sum);
        [self.direction - h, self.direction + h]
    }

    pub fn index(&self) -> i64 {
        match self.origin {
            LineOrigin::Case1 { index } | LineOrigin::Case2 { index, .. } => index,
        }
    }
}

fn case1_line(cp: &CauchyProblem, k: i64, k_sum: f64) -> StokesLine {
    StokesLine {
        direction: (2.0 * PI * k as f64 - cp.a.arg()) / cp.q1(),
        origin: LineOrigin::Case1 { index: k },
        k_sum,
    }
}

fn case2_line(cp: &CauchyProblem, l: i64, z: Complex64, k_sum: f64) -> Result<StokesLine> {
    let z0 = cp
        .phi
        .singular_point()
        .ok_or_else(|| Error::domain(format!("datum {} has no singular point, so no Stokes lines", cp.phi.name())))?;
    if (z0 - z).norm() < 1e-12 {
        return Err(Error::domain("Stokes lines are undefined at z = z0"));
    }
    let theta_z = (z0 - z).arg();
    Ok(StokesLine {
        direction: (cp.r as f64 * theta_z - 2.0 * PI * l as f64 - cp.a.arg()) / cp.q1(),
        origin: LineOrigin::Case2 {
            index: l,
            base: [z.re, z.im],
        },
        k_sum,
    })
}

/// The Stokes lines at `z`: `k = 0..q` in Case 1, `l = 0..r−1` in Case 2.
/// Empty for the convergent regimes and for entire data in Case 2.
pub fn singular_directions(cp: &CauchyProblem, z: Complex64) -> Result<Vec<StokesLine>> {
    let regime = classify(cp);
    match regime.tag {
        RegimeTag::Summable1c => {
            let k = regime.k.unwrap_or(1.0);
            Ok((0..=cp.q as i64).map(|i| case1_line(cp, i, k)).collect())
        }
        RegimeTag::Summable2 => {
            if cp.phi.singular_point().is_none() {
                return Ok(Vec::new());
            }
            let k = regime.k.unwrap_or(1.0);
            (0..cp.r as i64).map(|l| case2_line(cp, l, z, k)).collect()
        }
        _ => Ok(Vec::new()),
    }
}

/// The line with index `index` (`k` in Case 1, `l` in Case 2) at `z`.
pub fn stokes_line(cp: &CauchyProblem, index: i64, z: Complex64) -> Result<StokesLine> {
    let regime = classify(cp);
    match regime.tag {
        RegimeTag::Summable1c => Ok(case1_line(cp, index, regime.k.unwrap_or(1.0))),
        RegimeTag::Summable2 => case2_line(cp, index, z, regime.k.unwrap_or(1.0)),
        tag => Err(Error::domain(format!("regime {tag} has no Stokes lines"))),
    }
}

/// Lateral offset: `requested` (default 0.25) clamped to a third of the gap
/// to the neighbouring singular direction.
pub fn lateral_eps(cp: &CauchyProblem, requested: Option<f64>) -> Result<f64> {
    let eps = requested.unwrap_or(DEFAULT_EPS);
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::validation(format!("lateral offset must be positive, got {eps}")));
    }
    let gap = 2.0 * PI / cp.q1();
    Ok(eps.min(gap / 3.0))
}

type KernelCache = Mutex<HashMap<(u32, u32, u32), KernelPair>>;

fn kernel_cache() -> &'static KernelCache {
    static CACHE: OnceLock<KernelCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The regime kernel, built once per `(p, q, r)` and shared afterwards.
pub fn shared_kernel(cp: &CauchyProblem) -> Result<KernelPair> {
    let key = (cp.p, cp.q, cp.r);
    if let Some(kp) = kernel_cache().lock().expect("kernel cache poisoned").get(&key) {
        return Ok(kp.clone());
    }
    let kp = regime_kernel(cp, Direction(0.0))?;
    kernel_cache()
        .lock()
        .expect("kernel cache poisoned")
        .entry(key)
        .or_insert(kp.clone());
    Ok(kp)
}

fn check_t(t: CoverPoint) -> Result<()> {
    if t.modulus > 0.0 && t.modulus.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("t must be nonzero and finite"))
    }
}

/// `u^{d}(t, z)`: Laplace transform of the closed-form Borel sum along
/// `d_side` with the regime kernel.
pub fn lateral_sum(cp: &CauchyProblem, d_side: Direction, t: CoverPoint, z: Complex64, cfg: &QuadratureConfig) -> Result<Estimate> {
    check_t(t)?;
    let borel = ProblemBorel::new(cp, z)?;
    if let Some(s) = borel.singular_directions_near(d_side.theta(), 1e-9).first() {
        return Err(Error::validation(format!(
            "direction {:.6} lies on the Stokes line {s:.6}; choose a nonsingular direction",
            d_side.theta()
        )));
    }
    let kp = shared_kernel(cp)?;
    laplace(&kp, d_side, &borel, t, cfg)
}

/// `u^{d+ε} − u^{d−ε}` across the line `d`.
pub fn lateral_difference(
    cp: &CauchyProblem,
    d: Direction,
    eps: f64,
    t: CoverPoint,
    z: Complex64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let plus = lateral_sum(cp, d.offset(eps), t, z, cfg)?;
    let minus = lateral_sum(cp, d.offset(-eps), t, z, cfg)?;
    Ok(plus.add(minus.scale(Complex64::new(-1.0, 0.0))))
}

/// `∏_{j≠k} (1 − e^{2πi(j−k)/(q+1)})`, equal to `q + 1`.
pub fn product_identity(q: u32, k: u32) -> Complex64 {
    let q1 = (q + 1) as f64;
    (0..=q)
        .filter(|&j| j != k)
        .map(|j| Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 2.0 * PI * (j as f64 - k as f64) / q1))
        .product()
}

/// Jump across `d_k` in closed form: `2πi φ(z) e_m(s_k/t)/(q+1)` with
/// `s_k` the pole of the Borel sum on `d_k`.
pub fn jump_closed_form_case1(cp: &CauchyProblem, k: i64, t: CoverPoint, z: Complex64) -> Result<Complex64> {
    if classify(cp).tag != RegimeTag::Summable1c {
        return Err(Error::domain("the closed-form jump exists in regime Summable1c only"));
    }
    check_t(t)?;
    let phi = cp.phi.eval(z)?;
    if phi == Complex64::new(0.0, 0.0) {
        return Ok(phi);
    }
    let q1 = cp.q1();
    let line = case1_line(cp, k, 1.0);
    let modulus = (cp.a.norm() * q1.powf(cp.p as f64 - 1.0)).powf(-1.0 / q1);
    let s_k = CoverPoint::on_ray(modulus, line.direction);
    let kp = shared_kernel(cp)?;
    let e = kp.e(s_k.div(t))?;
    Ok(Complex64::new(0.0, 2.0 * PI) * phi * e / q1)
}

/// Tail of `∫_R^∞ |g| |e_m(s/t)| ds/s` from the kernel flatness and the ray
/// bound of `g`.
fn pairing_radius(kp: &KernelPair, g: &dyn BorelFunction, dir: f64, t: CoverPoint, tol: f64) -> Result<(f64, f64)> {
    let fl = kp.flatness(dir - t.arg)?;
    let tail = |r: f64| -> f64 {
        let mut total = 0.0;
        let mut lo = r;
        for _ in 0..4000 {
            let hi = lo * 1.25;
            let term = fl.bound(lo / t.modulus) * g.ray_bound(dir, hi) * 1.25f64.ln();
            if !term.is_finite() {
                return f64::INFINITY;
            }
            total += term;
            if term <= 1e-30 * total.max(1e-300) || (lo / (t.modulus * fl.b)).powf(fl.k) > 800.0 {
                return total;
            }
            lo = hi;
        }
        f64::INFINITY
    };
    let mut r = t.modulus * fl.b;
    loop {
        let tl = tail(r);
        if tl <= tol {
            return Ok((r, tl));
        }
        if !tl.is_finite() || (r / (t.modulus * fl.b)).powf(fl.k) > 800.0 {
            return Err(Error::domain(format!("defining function grows too fast along {dir:.6}")));
        }
        r *= 1.25;
    }
}

fn truncated_ray(kp: &KernelPair, g: &dyn BorelFunction, dir: f64, t: CoverPoint, cfg: &QuadratureConfig) -> Result<Estimate> {
    let (radius, tail) = pairing_radius(kp, g, dir, t, 0.25 * cfg.abs_tol)?;
    let spec = RayQuadratureSpec {
        direction: Direction(dir),
        radius,
        abs_tol: cfg.abs_tol,
        max_subdivisions: cfg.max_subdivisions,
        decay: None,
    };
    let fl = kp.flatness(dir - t.arg)?;
    kp.prepare_ray(CoverPoint::on_ray(1.0, dir).div(t).arg);
    let f = |s: Complex64| -> Result<Complex64> {
        if s.norm() == 0.0 || fl.ln_bound(s.norm() / t.modulus) < NEGLIGIBLE_LN {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let sp = CoverPoint::on_ray(s.norm(), dir);
        let e = kp.e(sp.div(t))?;
        if e.norm() == 0.0 {
            return Ok(e);
        }
        Ok(g.eval(sp)? * e / s)
    };
    let est = ray_integral(f, &spec)?;
    Ok(Estimate {
        error: est.error + tail,
        ..est
    })
}

/// Köthe pairing of the hyperfunction `[g]_d` with `e_m(s/t)/s`:
/// `∫_{γ_{d+ε}} − ∫_{γ_{d−ε}}` over truncated rays.
pub fn hyperfunction_pairing(
    g: &dyn BorelFunction,
    d: Direction,
    kp: &KernelPair,
    t: CoverPoint,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    check_t(t)?;
    let plus = truncated_ray(kp, g, d.theta() + eps, t, cfg)?;
    let minus = truncated_ray(kp, g, d.theta() - eps, t, cfg)?;
    Ok(plus.add(minus.scale(Complex64::new(-1.0, 0.0))))
}

/// One translate `φ(z + ωʲ A s^{(q+1)/r}) / r` of the Case 2 Borel sum.
#[derive(Debug, Clone)]
pub struct TranslateBorel {
    cp: CauchyProblem,
    z: Complex64,
    j: u32,
}

impl TranslateBorel {
    pub fn new(cp: &CauchyProblem, z: Complex64, j: u32) -> Result<Self> {
        if classify(cp).tag != RegimeTag::Summable2 {
            return Err(Error::domain("translates exist in regime Summable2 only"));
        }
        Ok(TranslateBorel {
            cp: cp.clone(),
            z,
            j: j % cp.r,
        })
    }
}

impl BorelFunction for TranslateBorel {
    fn eval(&self, s: CoverPoint) -> Result<Complex64> {
        let w = case2_translate(&self.cp, self.j, s);
        Ok(self.cp.phi.eval_derivative_along(0, self.z, self.z + w)? / self.cp.r as f64)
    }

    fn ray_bound(&self, direction: f64, rho: f64) -> f64 {
        let w = case2_translate(&self.cp, self.j, CoverPoint::on_ray(rho, direction));
        self.cp.phi.segment_bound(self.z, self.z + w) / self.cp.r as f64
    }
}

/// A Case 2 jump with its conditioning note.
#[derive(Debug, Clone, PartialEq)]
pub struct Case2Jump {
    pub value: Estimate,
    pub line: StokesLine,
    pub warning: Option<String>,
}

fn conditioning_warning(cp: &CauchyProblem, z: Complex64) -> Option<String> {
    let z0 = cp.phi.singular_point()?;
    ((z - z0).norm() < CONDITIONING_RATIO * z0.norm()).then(|| {
        format!(
            "|z - z0| = {:.3e} is below {CONDITIONING_RATIO}|z0|; the Stokes line direction is ill-conditioned",
            (z - z0).norm()
        )
    })
}

/// Jump across `δ_l`: pairing of the `l`-th translate along the line.
pub fn jump_case2(cp: &CauchyProblem, l: i64, t: CoverPoint, z: Complex64, eps: Option<f64>, cfg: &QuadratureConfig) -> Result<Case2Jump> {
    if classify(cp).tag != RegimeTag::Summable2 {
        return Err(Error::domain("jump_case2 needs regime Summable2"));
    }
    check_t(t)?;
    let line = stokes_line(cp, l, z)?;
    let eps = lateral_eps(cp, eps)?;
    let j = l.rem_euclid(cp.r as i64) as u32;
    let g = TranslateBorel::new(cp, z, j)?;
    let kp = shared_kernel(cp)?;
    let value = hyperfunction_pairing(&g, Direction(line.direction), &kp, t, eps, cfg)?;
    Ok(Case2Jump {
        value,
        line,
        warning: conditioning_warning(cp, z),
    })
}

/// Jump across line `index` at `z`: Case 1 through the closed form (only
/// `φ(z)` depends on `z`), Case 2 through the pairing with the line
/// recomputed at `z`.
pub fn jump_at_z(cp: &CauchyProblem, index: i64, t: CoverPoint, z: Complex64, cfg: &QuadratureConfig) -> Result<Complex64> {
    match classify(cp).tag {
        RegimeTag::Summable1c => jump_closed_form_case1(cp, index, t, z),
        RegimeTag::Summable2 => Ok(jump_case2(cp, index, t, z, None, cfg)?.value.value),
        tag => Err(Error::domain(format!("regime {tag} has no Stokes jumps"))),
    }
}

/// All routes at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpSample {
    pub t: CoverPoint,
    pub closed: Option<Complex64>,
    pub pairing: Complex64,
    pub lateral: Complex64,
    pub eps: f64,
}

impl JumpSample {
    /// Maximum pairwise relative deviation of the routes present.
    pub fn max_rel_disagreement(&self) -> f64 {
        let mut vals = vec![self.pairing, self.lateral];
        vals.extend(self.closed);
        let mut worst: f64 = 0.0;
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let scale = vals[i].norm().max(vals[j].norm());
                let dev = (vals[i] - vals[j]).norm();
                worst = worst.max(if scale > 0.0 { dev / scale } else { 0.0 });
            }
        }
        worst
    }
}

/// Evaluate every route for the line `index` at one `t`.
pub fn jump_sample(cp: &CauchyProblem, index: i64, t: CoverPoint, z: Complex64, eps: Option<f64>, cfg: &QuadratureConfig) -> Result<JumpSample> {
    check_t(t)?;
    let line = stokes_line(cp, index, z)?;
    let eps = lateral_eps(cp, eps)?;
    let lateral = lateral_difference(cp, Direction(line.direction), eps, t, z, cfg)?.value;
    let (closed, pairing) = match classify(cp).tag {
        RegimeTag::Summable1c => {
            let closed = jump_closed_form_case1(cp, index, t, z)?;
            let g = ProblemBorel::new(cp, z)?;
            let kp = shared_kernel(cp)?;
            let pairing = hyperfunction_pairing(&g, Direction(line.direction), &kp, t, eps, cfg)?.value;
            (Some(closed), pairing)
        }
        _ => (None, jump_case2(cp, index, t, z, Some(eps), cfg)?.value.value),
    };
    Ok(JumpSample {
        t,
        closed,
        pairing,
        lateral,
        eps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpReport {
    pub line: StokesLine,
    pub samples: Vec<JumpSample>,
    pub max_rel_disagreement: f64,
    pub warning: Option<String>,
}

impl JumpReport {
    pub fn assemble(cp: &CauchyProblem, line: StokesLine, z: Complex64, samples: Vec<JumpSample>) -> JumpReport {
        let max_rel_disagreement = samples.iter().map(JumpSample::max_rel_disagreement).fold(0.0, f64::max);
        let warning = match line.origin {
            LineOrigin::Case2 { .. } => conditioning_warning(cp, z),
            LineOrigin::Case1 { .. } => None,
        };
        JumpReport {
            line,
            samples,
            max_rel_disagreement,
            warning,
        }
    }
}

/// Sequential jump report at the given `|t|` values on the line.
pub fn jump_report(cp: &CauchyProblem, index: i64, moduli: &[f64], z: Complex64, eps: Option<f64>, cfg: &QuadratureConfig) -> Result<JumpReport> {
    let line = stokes_line(cp, index, z)?;
    let samples = moduli
        .iter()
        .map(|&m| jump_sample(cp, index, CoverPoint::on_ray(m, line.direction), z, eps, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(JumpReport::assemble(cp, line, z, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::InitialDatum;
    use crate::transforms::FnBorel;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn euler() -> CauchyProblem {
        CauchyProblem::new(2, 0, 0, c(1.0, 0.0), InitialDatum::constant(1.0)).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn singular_direction_examples() {
        let cp = CauchyProblem::new(2, 1, 0, c(1.0, 0.0), InitialDatum::constant(1.0)).unwrap();
        let dirs: Vec<f64> = singular_directions(&cp, c(0.0, 0.0)).unwrap().iter().map(|l| l.direction).collect();
        assert_eq!(dirs, vec![0.0, PI]);
        let cp = CauchyProblem::new(2, 0, 0, c(0.0, 1.0), InitialDatum::constant(1.0)).unwrap();
        let line = singular_directions(&cp, c(0.0, 0.0)).unwrap()[0];
        assert!((line.direction + PI / 2.0).abs() < 1e-15);
        assert!((stokes_line(&cp, 1, c(0.0, 0.0)).unwrap().direction - 1.5 * PI).abs() < 1e-15);
        let geo = InitialDatum::rational(c(1.0, 0.0), 1).unwrap();
        let cp = CauchyProblem::new(0, 0, 2, c(1.0, 0.0), geo).unwrap();
        let dirs: Vec<f64> = singular_directions(&cp, c(0.0, 0.0)).unwrap().iter().map(|l| l.direction).collect();
        assert_eq!(dirs, vec![0.0, -2.0 * PI]);
        let cp = CauchyProblem::new(1, 0, 0, c(1.0, 0.0), InitialDatum::constant(1.0)).unwrap();
        assert!(singular_directions(&cp, c(0.0, 0.0)).unwrap().is_empty());
    }

    #[test]
    fn anti_stokes_placement_is_exact() {
        for (p, q) in [(2, 0), (3, 1), (4, 2)] {
            let cp = CauchyProblem::new(p, q, 0, c(0.3, -1.0), InitialDatum::constant(1.0)).unwrap();
            for line in singular_directions(&cp, c(0.0, 0.0)).unwrap() {
                let h = PI / (2.0 * line.k_sum);
                let [lo, hi] = line.anti_stokes();
                assert_eq!(lo, line.direction - h);
                assert_eq!(hi, line.direction + h);
            }
        }
    }

    #[test]
    fn product_identity_holds() {
        for q in 1..=6 {
            for k in 0..=q {
                assert!((product_identity(q, k) - (q + 1) as f64).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn euler_jump_routes() {
        let cp = euler();
        let cfg = QuadratureConfig::default();
        let t = CoverPoint::on_ray(0.2, 0.0);
        let closed = jump_closed_form_case1(&cp, 0, t, c(0.0, 0.0)).unwrap();
        let oracle = c(0.0, 2.0 * PI) * 5.0 * (-5.0f64).exp();
        assert!(rel(closed, oracle) < 1e-12);
        let lat = lateral_difference(&cp, Direction(0.0), 0.3, t, c(0.0, 0.0), &cfg).unwrap();
        assert!(rel(lat.value, oracle) < 1e-5, "{}", lat.value);
        let g = ProblemBorel::new(&cp, c(0.0, 0.0)).unwrap();
        let kp = shared_kernel(&cp).unwrap();
        let pair = hyperfunction_pairing(&g, Direction(0.0), &kp, t, 0.25, &cfg).unwrap();
        assert!(rel(pair.value, oracle) < 1e-5, "{}", pair.value);
        let zero = CauchyProblem::new(2, 0, 0, c(1.0, 0.0), InitialDatum::constant(0.0)).unwrap();
        assert_eq!(jump_closed_form_case1(&zero, 0, t, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(jump_closed_form_case1(&cp, 0, CoverPoint::on_ray(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn pairing_of_entire_function_vanishes_and_is_linear() {
        let cfg = QuadratureConfig::default();
        let kp = shared_kernel(&euler()).unwrap();
        let t = CoverPoint::on_ray(0.2, 0.0);
        let entire = FnBorel::new(|s| Ok((-s.to_complex()).exp()), |_, _| 1.0);
        let v = hyperfunction_pairing(&entire, Direction(0.0), &kp, t, 0.25, &cfg).unwrap();
        assert!(v.value.norm() < 1e-8);
        let g1 = FnBorel::geometric(c(1.0, 0.0));
        let g2 = FnBorel::new(|s| Ok(s.to_complex() * s.to_complex()), |_, r| r * r);
        let sum = {
            let (a, b) = (g1.clone(), g2.clone());
            FnBorel::new(
                move |s| Ok(a.eval(s)? + b.eval(s)?),
                |dir, r| {
                    let psi = dir;
                    let dist = if psi.cos() > 0.0 { psi.sin().abs() } else { 1.0 };
                    1.0 / dist + r * r
                },
            )
        };
        let p1 = hyperfunction_pairing(&g1, Direction(0.0), &kp, t, 0.25, &cfg).unwrap().value;
        let p2 = hyperfunction_pairing(&g2, Direction(0.0), &kp, t, 0.25, &cfg).unwrap().value;
        let p12 = hyperfunction_pairing(&sum, Direction(0.0), &kp, t, 0.25, &cfg).unwrap().value;
        assert!((p12 - p1 - p2).norm() < 1e-9);
    }

    #[test]
    fn lateral_sum_examples() {
        let cp = euler();
        let cfg = QuadratureConfig::default();
        let z = c(0.0, 0.0);
        let v = lateral_sum(&cp, Direction(PI), CoverPoint::on_ray(0.2, PI), z, &cfg).unwrap();
        assert!(v.value.im.abs() <= 1e-9);
        let t = CoverPoint::on_ray(0.15, 0.0);
        let plus = lateral_sum(&cp, Direction(0.3), t, z, &cfg).unwrap().value;
        let minus = lateral_sum(&cp, Direction(-0.3), t, z, &cfg).unwrap().value;
        let expected = 2.0 * PI * (-1.0f64 / 0.15).exp() / 0.15;
        assert!(((plus - minus).norm() - expected).abs() < 1e-6 * expected);
        assert!(matches!(lateral_sum(&cp, Direction(0.3), CoverPoint::on_ray(0.0, 0.0), z, &cfg), Err(Error::Domain(_))));
        assert!(matches!(lateral_sum(&cp, Direction(0.0), t, z, &cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn case2_route_agreement_and_selection() {
        let geo = InitialDatum::rational(c(1.0, 0.0), 1).unwrap();
        let cp = CauchyProblem::new(0, 0, 2, c(1.0, 0.0), geo).unwrap();
        let cfg = QuadratureConfig::default();
        let z = c(0.0, 0.0);
        let t = CoverPoint::on_ray(0.1, 0.0);
        let pair = jump_case2(&cp, 0, t, z, Some(0.2), &cfg).unwrap();
        assert!(pair.warning.is_none());
        let lat = lateral_difference(&cp, Direction(0.0), 0.2, t, z, &cfg).unwrap();
        assert!(rel(pair.value.value, lat.value) < 1e-4, "{} vs {}", pair.value.value, lat.value);
        let other = TranslateBorel::new(&cp, z, 1).unwrap();
        let kp = shared_kernel(&cp).unwrap();
        let v = hyperfunction_pairing(&other, Direction(0.0), &kp, t, 0.2, &cfg).unwrap();
        assert!(v.value.norm() <= 1e-8, "{}", v.value);
        assert!(jump_case2(&cp, 0, CoverPoint::on_ray(0.0, 0.0), z, None, &cfg).is_err());
    }

    #[test]
    fn jump_at_z_examples() {
        let cfg = QuadratureConfig::default();
        let geo = InitialDatum::rational(c(1.0, 0.0), 1).unwrap();
        let cp = CauchyProblem::new(2, 0, 0, c(1.0, 0.0), geo.clone()).unwrap();
        let t = CoverPoint::on_ray(0.2, 0.0);
        let j0 = jump_at_z(&cp, 0, t, c(0.0, 0.0), &cfg).unwrap();
        let j5 = jump_at_z(&cp, 0, t, c(0.5, 0.0), &cfg).unwrap();
        assert!(rel(j5, 2.0 * j0) < 1e-13);
        let cp2 = CauchyProblem::new(0, 0, 2, c(1.0, 0.0), geo).unwrap();
        assert_eq!(stokes_line(&cp2, 0, c(0.5, 0.0)).unwrap().direction, 0.0);
        let d = stokes_line(&cp2, 0, c(0.0, 0.5)).unwrap().direction;
        assert!((d / 2.0 - (-0.5f64).atan()).abs() < 1e-15);
        let near = jump_case2(&cp2, 0, CoverPoint::on_ray(0.05, 0.0), c(0.95, 0.0), None, &cfg);
        assert!(near.map(|j| j.warning.is_some()).unwrap_or(true));
    }

    #[test]
    fn jump_decays_along_line() {
        let cp = euler();
        let mags: Vec<f64> = [0.3, 0.2, 0.1, 0.05]
            .iter()
            .map(|&m| jump_closed_form_case1(&cp, 0, CoverPoint::on_ray(m, 0.0), c(0.0, 0.0)).unwrap().norm())
            .collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn lateral_eps_clamp() {
        let cp = CauchyProblem::new(2, 8, 0, c(1.0, 0.0), InitialDatum::constant(1.0)).unwrap();
        assert!((lateral_eps(&cp, None).unwrap() - 2.0 * PI / 27.0).abs() < 1e-15);
        assert_eq!(lateral_eps(&euler(), None).unwrap(), DEFAULT_EPS);
        assert!(lateral_eps(&euler(), Some(-1.0)).is_err());
    }
}
