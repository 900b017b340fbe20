//! Ray quadrature, the moment Borel transform, the moment Laplace transform
//! `T_{m,d}`, its inverse `T⁻_{m,d}` and the k-sum.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CoverPoint, Direction};
use crate::guard::{quad_error, run_guarded, stash};
use crate::moments::{KernelPair, MomentFunction};
use crate::quadrature::{self, Estimate, QuadFailure, QuadratureConfig};
use crate::series::FormalSeries;

/// An analytic function on a disc-sector, as seen by the Laplace transform.
pub trait BorelFunction: Send + Sync {
    fn eval(&self, s: CoverPoint) -> Result<Complex64>;

    /// Upper bound of `|v(s)|` on the segment `{x e^{i direction} : 0 < x <= rho}`.
    fn ray_bound(&self, direction: f64, rho: f64) -> f64;

    /// Singular directions within `radius` of `d`.
    fn singular_directions_near(&self, _d: f64, _radius: f64) -> Vec<f64> {
        Vec::new()
    }
}

type EvalFn = dyn Fn(CoverPoint) -> Result<Complex64> + Send + Sync;
type BoundFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A Borel function assembled from closures.
#[derive(Clone)]
pub struct FnBorel {
    eval: Arc<EvalFn>,
    bound: Arc<BoundFn>,
    singular: Vec<f64>,
    period: f64,
}

impl FnBorel {
    pub fn new<F, B>(eval: F, bound: B) -> Self
    where
        F: Fn(CoverPoint) -> Result<Complex64> + Send + Sync + 'static,
        B: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        FnBorel {
            eval: Arc::new(eval),
            bound: Arc::new(bound),
            singular: Vec::new(),
            period: 2.0 * PI,
        }
    }

    /// Declare singular directions `base + j·period`, `j ∈ Z`.
    pub fn with_singular_directions(mut self, base: Vec<f64>, period: f64) -> Self {
        self.singular = base;
        self.period = period;
        self
    }

    /// `v(s) = sⁿ`.
    pub fn monomial(n: u32) -> Self {
        FnBorel::new(move |s| Ok(s.powf(n as f64)), move |_, rho| rho.powi(n as i32))
    }

    /// `v(s) = 1/(1 − c s)`, singular along `−arg c`.
    pub fn geometric(c: Complex64) -> Self {
        let sing = -c.arg();
        FnBorel::new(
            move |s| {
                let w = Complex64::new(1.0, 0.0) - c * s.to_complex();
                if w.norm() < 1e-300 {
                    return Err(Error::SingularEvaluation("pole of 1/(1 - c s)".into()));
                }
                Ok(w.inv())
            },
            move |dir, _| {
                // distance from 1 to the ray arg w = dir + arg c
                let psi = dir + c.arg();
                let dist = if psi.cos() > 0.0 { psi.sin().abs() } else { 1.0 };
                if dist == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / dist
                }
            },
        )
        .with_singular_directions(vec![sing], 2.0 * PI)
    }
}

impl std::fmt::Debug for FnBorel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnBorel").field("singular", &self.singular).finish_non_exhaustive()
    }
}

/// Members of `{base + j·period}` within `radius` of `d`.
pub fn periodic_directions_near(base: &[f64], period: f64, d: f64, radius: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &b in base {
        let j0 = ((d - radius - b) / period).ceil() as i64;
        let j1 = ((d + radius - b) / period).floor() as i64;
        for j in j0..=j1 {
            out.push(b + j as f64 * period);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

impl BorelFunction for FnBorel {
    fn eval(&self, s: CoverPoint) -> Result<Complex64> {
        (self.eval)(s)
    }

    fn ray_bound(&self, direction: f64, rho: f64) -> f64 {
        (self.bound)(direction, rho)
    }

    fn singular_directions_near(&self, d: f64, radius: f64) -> Vec<f64> {
        periodic_directions_near(&self.singular, self.period, d, radius)
    }
}

/// The sum of a convergent (Borel-transformed) series at a fixed `z`.
#[derive(Debug, Clone)]
pub struct SeriesBorel {
    stride: usize,
    coeffs: Vec<Complex64>,
}

impl SeriesBorel {
    /// Cache `terms` stride coefficients of `series` at `z`.
    pub fn new(series: &FormalSeries, z: Complex64, terms: usize) -> Result<Self> {
        Ok(SeriesBorel {
            stride: series.stride(),
            coeffs: series.truncate(terms, z)?,
        })
    }
}

impl BorelFunction for SeriesBorel {
    fn eval(&self, s: CoverPoint) -> Result<Complex64> {
        let ln_r = s.modulus.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        let mut last = 0.0;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let j = (n * self.stride) as f64;
            let term = if n == 0 {
                *c
            } else {
                Complex64::from_polar((c.norm().ln() + j * ln_r).exp(), c.arg() + j * s.arg)
            };
            let y = term - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            last = term.norm();
        }
        let tail_free = self.coeffs.last().is_some_and(|c| c.norm() == 0.0);
        if !tail_free && last > 1e-16 * acc.norm().max(1e-300) {
            return Err(Error::accuracy(
                format!("Borel series at |s| = {:.3e} needs more than {} terms", s.modulus, self.coeffs.len()),
                last / acc.norm().max(1e-300),
                1e-16,
            ));
        }
        Ok(acc)
    }

    fn ray_bound(&self, _direction: f64, rho: f64) -> f64 {
        let ln_r = rho.ln();
        let mut acc = 0.0;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.norm() > 0.0 {
                acc += if n == 0 {
                    c.norm()
                } else {
                    (c.norm().ln() + (n * self.stride) as f64 * ln_r).exp()
                };
            }
        }
        acc
    }
}

/// `|f(x e^{id})| <= a exp(−c x^k)` beyond the truncation radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub a: f64,
    pub c: f64,
    pub k: f64,
}

impl Decay {
    /// `∫_R^∞ a exp(−c x^k) dx`.
    pub fn tail(&self, r: f64) -> f64 {
        let cfg = QuadratureConfig::default().with_abs_tol(1e-300).with_rel_tol(1e-6);
        let f = |w: f64| {
            let x = r + w.exp();
            Complex64::new(self.a * (-self.c * x.powf(self.k)).exp() * w.exp(), 0.0)
        };
        match quadrature::integrate_support(f, 0.0, 0.5, (f64::NEG_INFINITY, f64::INFINITY), 1e-17, &cfg) {
            Ok(e) => e.value.re * 1.01,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Parameters of [`ray_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayQuadratureSpec {
    pub direction: Direction,
    /// Truncation radius; `f64::INFINITY` lets the decay bound choose it.
    pub radius: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub decay: Option<Decay>,
}

impl RayQuadratureSpec {
    pub fn new(direction: Direction, decay: Decay) -> Self {
        RayQuadratureSpec {
            direction,
            radius: f64::INFINITY,
            abs_tol: 1e-11,
            max_subdivisions: 4000,
            decay: Some(decay),
        }
    }
}

/// `∫_{e^{id}R+} f(s) ds`, truncated at `R` with the tail bounded by the
/// decay envelope.
pub fn ray_integral<F>(f: F, spec: &RayQuadratureSpec) -> Result<Estimate>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = spec.direction.theta();
    let unit = spec.direction.unit();
    let mut radius = spec.radius;
    let mut tail = 0.0;
    if let Some(decay) = spec.decay {
        if radius.is_infinite() {
            radius = 1.0;
            while decay.tail(radius) > 0.5 * spec.abs_tol {
                radius *= 1.25;
                if radius > 1e12 {
                    return Err(Error::domain("ray integrand decay too slow to truncate"));
                }
            }
        }
        tail = decay.tail(radius);
        if tail > 0.5 * spec.abs_tol {
            return Err(Error::accuracy("ray integral tail", tail, 0.5 * spec.abs_tol));
        }
    } else if radius.is_infinite() {
        return Err(Error::validation("an infinite ray needs a decay bound"));
    }
    let bps = quadrature::geometric_breakpoints(radius * 1e-12, radius, 2.0, true);
    let cfg = QuadratureConfig {
        abs_tol: 0.5 * spec.abs_tol,
        rel_tol: 0.0,
        max_subdivisions: spec.max_subdivisions,
    };
    let (out, pending) = run_guarded(|| quadrature::integrate(|x| stash(f(unit * x)) * unit, &bps, &cfg));
    finish(out, pending, d, 1.0, "ray integral", &cfg).map(|e| Estimate {
        error: e.error + tail,
        ..e
    })
}

/// Map a raw quadrature outcome on the ray of direction `d` to a result.
/// `scale` converts the integration variable to `|s|`.
fn finish(
    out: std::result::Result<Estimate, QuadFailure>,
    pending: Option<Error>,
    d: f64,
    scale: f64,
    context: &str,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    match (out, pending) {
        (_, Some(Error::SingularEvaluation(_))) => Err(Error::SingularRay {
            direction: d,
            modulus: f64::NAN,
        }),
        (_, Some(e)) => Err(e),
        (Ok(e), None) => Ok(e),
        (Err(QuadFailure::NonFinite { at }), None)
        | (Err(QuadFailure::NoConvergence { at, narrow: true, .. }), None) => Err(Error::SingularRay {
            direction: d,
            modulus: at * scale,
        }),
        (Err(f), None) => {
            let requested = match &f {
                QuadFailure::NoConvergence { estimate, .. } => {
                    cfg.target(estimate.value) / estimate.value.norm().max(f64::MIN_POSITIVE)
                }
                QuadFailure::NonFinite { .. } => cfg.rel_tol,
            };
            Err(quad_error(context, f, requested))
        }
    }
}

/// Kernel values below `e^{NEGLIGIBLE_LN}` by the flatness bound are not
/// evaluated.
pub const NEGLIGIBLE_LN: f64 = -700.0;

/// The m-moment Borel transform: coefficient of `t^j` divided by `m(j)`.
pub fn borel(m: &MomentFunction, f: &FormalSeries) -> FormalSeries {
    let m = m.clone();
    let stride = f.stride();
    f.map(move |n, c| Ok(c / m.eval((n * stride) as f64)))
}

/// Tail of the Laplace integral beyond `y`, bounded by an upper Riemann sum
/// of the flatness envelope times the ray bound of `v`.
fn laplace_tail(
    fl: &crate::moments::Flatness,
    v: &dyn BorelFunction,
    d: f64,
    t_mod: f64,
    y: f64,
) -> f64 {
    const RATIO: f64 = 1.25;
    let mut total = 0.0;
    let mut lo = y;
    for _ in 0..4000 {
        let hi = lo * RATIO;
        let term = (fl.ln_bound(lo)).exp() * v.ray_bound(d, t_mod * hi) * RATIO.ln();
        if !term.is_finite() {
            return f64::INFINITY;
        }
        total += term;
        if term <= 1e-30 * total.max(1e-300) || (lo / fl.b).powf(fl.k) > 800.0 {
            return total;
        }
        lo = hi;
    }
    f64::INFINITY
}

/// `T_{m,d} v (t) = ∫_{e^{id}R+} e_m(s/t) v(s) ds/s`.
pub fn laplace(
    kp: &KernelPair,
    d: Direction,
    v: &dyn BorelFunction,
    t: CoverPoint,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(t.modulus > 0.0) || !t.modulus.is_finite() {
        return Err(Error::domain("Laplace transform needs t != 0"));
    }
    let d = d.theta();
    let theta = d - t.arg;
    if theta.abs() >= kp.half_opening() {
        return Err(Error::domain(format!(
            "|arg t - d| = {:.6} is not below pi/(2k) = {:.6}",
            theta.abs(),
            kp.half_opening()
        )));
    }
    if !v.singular_directions_near(d, 1e-12).is_empty() {
        return Err(Error::SingularRay {
            direction: d,
            modulus: f64::NAN,
        });
    }
    let fl = kp.flatness(theta)?;
    let tail_target = 0.25 * cfg.abs_tol;
    let mut y_max = fl.b;
    loop {
        let tail = laplace_tail(&fl, v, d, t.modulus, y_max);
        if tail <= tail_target {
            break;
        }
        if !tail.is_finite() || (y_max / fl.b).powf(fl.k) > 800.0 {
            return Err(Error::domain(format!(
                "Borel function grows too fast for the kernel along direction {d:.6}"
            )));
        }
        y_max *= 1.25;
    }
    let bps = quadrature::geometric_breakpoints(y_max * 1e-10, y_max, 2.0, true);
    let tail = laplace_tail(&fl, v, d, t.modulus, y_max);
    let inner_cfg = QuadratureConfig {
        abs_tol: 0.5 * cfg.abs_tol,
        ..*cfg
    };
    kp.prepare_ray(theta);
    let (out, pending) = run_guarded(|| {
        quadrature::integrate(
            |y: f64| {
                if y == 0.0 || fl.ln_bound(y) < NEGLIGIBLE_LN {
                    return Complex64::new(0.0, 0.0);
                }
                let e = stash(kp.e(CoverPoint::on_ray(y, theta)));
                if e.norm() == 0.0 {
                    return e;
                }
                e * stash(v.eval(CoverPoint::on_ray(t.modulus * y, d))) / y
            },
            &bps,
            &inner_cfg,
        )
    });
    finish(out, pending, d, t.modulus, "Laplace transform", &inner_cfg).map(|e| Estimate {
        error: e.error + tail,
        ..e
    })
}

/// The contour `γ(d)` of the inverse transform: boundary of the sector
/// `S_d(opening, radius)`, negatively oriented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourGammaD {
    pub direction: Direction,
    pub opening: f64,
    pub radius: f64,
}

impl ContourGammaD {
    /// Default opening `π/k + 0.1`.
    pub fn new(kp: &KernelPair, direction: Direction, radius: f64) -> Result<Self> {
        ContourGammaD::with_opening(direction, PI / kp.k() + 0.1, radius)
    }

    pub fn with_opening(direction: Direction, opening: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain(format!("contour radius must be positive and finite, got {radius}")));
        }
        if !(opening > 0.0) || opening >= 2.0 * PI {
            return Err(Error::domain(format!("contour opening must lie in (0, 2pi), got {opening}")));
        }
        Ok(ContourGammaD {
            direction,
            opening,
            radius,
        })
    }
}

/// `T⁻_{m,d} v (s) = −(1/2πi) ∮_{γ(d)} E_m(s/t) v(t) dt/t`.
pub fn inverse_laplace(
    kp: &KernelPair,
    contour: &ContourGammaD,
    v: &dyn Fn(CoverPoint) -> Result<Complex64>,
    s: CoverPoint,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let d = contour.direction.theta();
    let beta = 0.5 * contour.opening;
    let rho = contour.radius;
    let slack = beta - kp.half_opening();
    if slack <= 0.0 || (s.arg - d).abs() >= slack {
        return Err(Error::domain(format!(
            "arg s = {:.6} must lie within {:.6} of the contour direction {d:.6}",
            s.arg,
            slack.max(0.0)
        )));
    }
    let f = |tp: CoverPoint| -> Complex64 {
        let e = stash(kp.big_e(s.div(tp).to_complex()));
        e * stash(v(tp))
    };
    let leg = |phi: f64| {
        let (out, pending) = run_guarded(|| {
            quadrature::integrate_support(
                |w: f64| f(CoverPoint::on_ray(w.exp(), phi)),
                rho.ln() - 1.0,
                0.5,
                (f64::NEG_INFINITY, rho.ln()),
                1e-17,
                cfg,
            )
        });
        finish(out, pending, phi, 1.0, "inverse Laplace leg", cfg)
    };
    let out = leg(d + beta)?;
    let back = leg(d - beta)?;
    let arc_bps: Vec<f64> = (0..=16).map(|i| d - beta + 2.0 * beta * i as f64 / 16.0).collect();
    let (arc, pending) = run_guarded(|| quadrature::integrate(|th: f64| f(CoverPoint::on_ray(rho, th)), &arc_bps, cfg));
    let arc = finish(arc, pending, d, rho, "inverse Laplace arc", cfg)?;
    let i = Complex64::new(0.0, 1.0);
    let loop_integral = out.value - back.value - i * arc.value;
    Ok(Estimate {
        value: -loop_integral / (2.0 * PI * i),
        error: (out.error + back.error + arc.error) / (2.0 * PI),
        evaluations: out.evaluations + back.evaluations + arc.evaluations,
    })
}

/// Direction window of the k-sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KSumOptions {
    /// Width `ε` of the window `(d − ε/2, d + ε/2)`; must contain no
    /// singular direction.
    pub window: f64,
    /// Integration direction inside the window; defaults to `d`.
    pub theta: Option<f64>,
}

/// The k-sum of a Borel sum in direction `d`.
pub fn k_sum(
    kp: &KernelPair,
    d: Direction,
    borel_sum: &dyn BorelFunction,
    t: CoverPoint,
    opts: &KSumOptions,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let half = 0.5 * opts.window.max(0.0);
    let near = borel_sum.singular_directions_near(d.theta(), half.max(1e-12));
    if let Some(s) = near.first() {
        return Err(Error::domain(format!(
            "singular direction {s:.6} lies in the k-sum window around {:.6}",
            d.theta()
        )));
    }
    let theta = opts.theta.unwrap_or(d.theta());
    if (theta - d.theta()).abs() > half {
        return Err(Error::validation(format!(
            "theta = {theta:.6} outside the window ({:.6}, {:.6})",
            d.theta() - half,
            d.theta() + half
        )));
    }
    laplace(kp, Direction(theta), borel_sum, t, cfg)
}
