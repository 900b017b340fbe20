//! Moment functions of real order and their kernel pairs `(e_m, E_m)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::geometry::{CoverPoint, Direction};
use crate::guard::{stash, with_pending};
use crate::quadrature::{self, Estimate, QuadratureConfig};
use crate::special::{ln_gamma, MittagLeffler};

/// `Γ_s(u)`: `Γ(1 + s u)` for `s >= 0`, `1 / Γ(1 − s u)` for `s < 0`.
pub fn gamma_s(s: f64, u: f64) -> f64 {
    ln_gamma_s(s, u).exp()
}

fn ln_gamma_s(s: f64, u: f64) -> f64 {
    if s >= 0.0 {
        ln_gamma(1.0 + s * u)
    } else {
        -ln_gamma(1.0 - s * u)
    }
}

/// Expression tree of a moment function over `Γ_s` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MomentExpr {
    One,
    Gamma(f64),
    Product(Box<MomentExpr>, Box<MomentExpr>),
    Quotient(Box<MomentExpr>, Box<MomentExpr>),
}

impl MomentExpr {
    fn ln_eval(&self, u: f64) -> f64 {
        match self {
            MomentExpr::One => 0.0,
            MomentExpr::Gamma(s) => ln_gamma_s(*s, u),
            MomentExpr::Product(a, b) => a.ln_eval(u) + b.ln_eval(u),
            MomentExpr::Quotient(a, b) => a.ln_eval(u) - b.ln_eval(u),
        }
    }

}

impl fmt::Display for MomentExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentExpr::One => write!(f, "1"),
            MomentExpr::Gamma(s) => write!(f, "Γ_{s}"),
            MomentExpr::Product(a, b) => write!(f, "({a})·({b})"),
            MomentExpr::Quotient(a, b) => write!(f, "({a})/({b})"),
        }
    }
}

/// A moment function `m` of real order `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFunction {
    expr: MomentExpr,
    order: f64,
}

/// Affine envelopes `a cⁿ Γ_s(n) <= m(n) <= A Cⁿ Γ_s(n)` fitted on `0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub s: f64,
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub big_c: f64,
    pub n_max: usize,
}

impl Sandwich {
    pub fn holds(&self, m: &MomentFunction) -> bool {
        (0..=self.n_max).all(|n| {
            let n_f = n as f64;
            let lm = m.ln_eval(n_f);
            let lg = ln_gamma_s(self.s, n_f);
            let lo = self.a.ln() + n_f * self.c.ln() + lg;
            let hi = self.big_a.ln() + n_f * self.big_c.ln() + lg;
            lm >= lo - 1e-9 * lo.abs().max(1.0) && lm <= hi + 1e-9 * hi.abs().max(1.0)
        })
    }
}

impl MomentFunction {
    /// The constant moment function `1` of order 0.
    pub fn one() -> Self {
        MomentFunction {
            expr: MomentExpr::One,
            order: 0.0,
        }
    }

    /// `Γ_s`, of order `s`.
    pub fn gamma(s: f64) -> Self {
        MomentFunction {
            expr: MomentExpr::Gamma(s),
            order: s,
        }
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn expr(&self) -> &MomentExpr {
        &self.expr
    }

    pub fn ln_eval(&self, u: f64) -> f64 {
        self.expr.ln_eval(u)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.ln_eval(u).exp()
    }

    pub fn product(&self, other: &MomentFunction) -> MomentFunction {
        let expr = match (&self.expr, &other.expr) {
            (MomentExpr::One, e) | (e, MomentExpr::One) => e.clone(),
            (a, b) => MomentExpr::Product(Box::new(a.clone()), Box::new(b.clone())),
        };
        MomentFunction {
            expr,
            order: self.order + other.order,
        }
    }

    pub fn quotient(&self, other: &MomentFunction) -> MomentFunction {
        let expr = match (&self.expr, &other.expr) {
            (a, b) if a == b => MomentExpr::One,
            (a, MomentExpr::One) => a.clone(),
            (a, b) => MomentExpr::Quotient(Box::new(a.clone()), Box::new(b.clone())),
        };
        MomentFunction {
            order: self.order - other.order,
            expr,
        }
    }

    /// `m^n` (the constant 1 for `n = 0`).
    pub fn power(&self, n: u32) -> MomentFunction {
        (0..n).fold(MomentFunction::one(), |acc, _| acc.product(self))
    }

    /// Growth exponent recovered from `ln m(n) ≈ s n ln n + β n + δ ln n + γ`
    /// on `1..=n_max`.
    pub fn fitted_order(&self, n_max: usize) -> Result<f64> {
        let rows: Vec<Vec<f64>> = (1..=n_max)
            .map(|n| {
                let x = n as f64;
                vec![x * x.ln(), x, x.ln(), 1.0]
            })
            .collect();
        let y: Vec<f64> = (1..=n_max).map(|n| self.ln_eval(n as f64)).collect();
        least_squares(&rows, &y)
            .map(|b| b[0])
            .ok_or_else(|| Error::validation("order fit needs at least 4 samples"))
    }

    /// Fit `ln m(n) − ln Γ_s(n) ≈ β n + γ` with `s` the order and widen the
    /// line to envelopes containing every residual.
    pub fn sandwich(&self, n_max: usize) -> Result<Sandwich> {
        let s = self.order;
        let rows: Vec<Vec<f64>> = (0..=n_max).map(|n| vec![n as f64, 1.0]).collect();
        let resid: Vec<f64> = (0..=n_max)
            .map(|n| self.ln_eval(n as f64) - ln_gamma_s(s, n as f64))
            .collect();
        let beta = least_squares(&rows, &resid).ok_or_else(|| Error::validation("sandwich fit needs 2 samples"))?;
        let dev: Vec<f64> = resid
            .iter()
            .enumerate()
            .map(|(n, r)| r - beta[0] * n as f64 - beta[1])
            .collect();
        let lo = dev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = dev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Sandwich {
            s,
            a: (beta[1] + lo).exp(),
            c: beta[0].exp(),
            big_a: (beta[1] + hi).exp(),
            big_c: beta[0].exp(),
            n_max,
        })
    }
}

pub fn moment_product(m1: &MomentFunction, m2: &MomentFunction) -> MomentFunction {
    m1.product(m2)
}

pub fn moment_quotient(m1: &MomentFunction, m2: &MomentFunction) -> MomentFunction {
    m1.quotient(m2)
}

/// How a kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelBacking {
    ClosedForm,
    IteratedQuadrature { depth: usize },
    ContourQuadrature,
}

/// Exponential flatness `|e(x e^{iφ})| <= a exp(−(x/b)^k)` along one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flatness {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

impl Flatness {
    pub fn bound(&self, x: f64) -> f64 {
        self.a * (-(x / self.b).powf(self.k)).exp()
    }

    pub fn ln_bound(&self, x: f64) -> f64 {
        self.a.ln() - (x / self.b).powf(self.k)
    }
}

/// Construction options for quadrature-backed kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOptions {
    /// Relative tolerance of each kernel evaluation.
    pub tol: f64,
    /// Directory for tabulated inner kernels (real-axis tables only).
    pub cache_dir: Option<PathBuf>,
    /// Largest admissible `p` for iterated constructions.
    pub max_p: u32,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            tol: 1e-10,
            cache_dir: None,
            max_p: 4,
        }
    }
}

/// Natural cubic spline on a uniform grid.
#[derive(Debug, Clone)]
struct UniformSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl UniformSpline {
    fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n >= 3 {
            // Thomas algorithm for m[i-1] + 4 m[i] + m[i+1] = rhs[i].
            let inner = n - 2;
            let mut c = vec![0.0; inner];
            let mut d = vec![0.0; inner];
            for i in 0..inner {
                let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
                let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
                c[i] = 1.0 / denom;
                d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
            }
            for i in (0..inner).rev() {
                let next = if i + 1 < inner { m[i + 2] } else { 0.0 };
                m[i + 1] = d[i] - c[i] * next;
            }
        }
        UniformSpline { x0, h, y, m }
    }

    fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let pos = (x - self.x0) / self.h;
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let t = pos - i as f64;
        let s = 1.0 - t;
        s * self.y[i]
            + t * self.y[i + 1]
            + self.h * self.h / 6.0 * ((s * s * s - s) * self.m[i] + (t * t * t - t) * self.m[i + 1])
    }
}

/// Tabulated `e` along the ray `arg y = direction`, splined in `ln y`.
#[derive(Debug, Clone)]
struct RayTable {
    ln_abs: UniformSpline,
    phase: UniformSpline,
}

const TABLE_LN_MIN: f64 = -30.0;
const TABLE_STEP: f64 = 0.02;
const TABLE_LN_FLOOR: f64 = -700.0;
const TABLE_TAIL_LN: f64 = -60.0;

impl RayTable {
    fn build(kernel: &KernelPair, direction: f64) -> Result<RayTable> {
        RayTable::build_with(|z| kernel.e(z), direction, kernel.options.tol)
    }

    /// Tabulate `e` along `direction`. An evaluation failure far out in the
    /// decaying tail ends the table there.
    fn build_with(mut e: impl FnMut(CoverPoint) -> Result<Complex64>, direction: f64, tol: f64) -> Result<RayTable> {
        let mut ln_abs: Vec<f64> = Vec::new();
        let mut phase = Vec::new();
        let mut prev_phase = 0.0;
        let mut i = 0usize;
        loop {
            let ln_y = TABLE_LN_MIN + i as f64 * TABLE_STEP;
            let v = match e(CoverPoint::on_ray(ln_y.exp(), direction)) {
                Ok(v) => v,
                Err(_) if ln_abs.last().is_some_and(|&l| l < TABLE_TAIL_LN) => break,
                Err(err) => return Err(err),
            };
            if v.norm() == 0.0 || v.norm().ln() < TABLE_LN_FLOOR || ln_y > 60.0 {
                break;
            }
            let mut ph = v.arg();
            if i > 0 {
                ph += 2.0 * PI * ((prev_phase - ph) / (2.0 * PI)).round();
            }
            prev_phase = ph;
            ln_abs.push(v.norm().ln());
            phase.push(ph);
            i += 1;
        }
        if ln_abs.len() < 4 {
            return Err(Error::accuracy("kernel tabulation (too few nodes)", f64::NAN, tol));
        }
        Ok(RayTable {
            ln_abs: UniformSpline::new(TABLE_LN_MIN, TABLE_STEP, ln_abs),
            phase: UniformSpline::new(TABLE_LN_MIN, TABLE_STEP, phase),
        })
    }

    fn from_pairs(pairs: &[(f64, f64)]) -> Option<RayTable> {
        if pairs.len() < 4 || pairs.iter().any(|&(x, e)| !(x > 0.0) || !(e > 0.0)) {
            return None;
        }
        let x0 = pairs[0].0.ln();
        let h = pairs[1].0.ln() - x0;
        if (x0 - TABLE_LN_MIN).abs() > 1e-9 || (h - TABLE_STEP).abs() > 1e-9 {
            return None;
        }
        let ln_abs: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
        let phase = vec![0.0; pairs.len()];
        Some(RayTable {
            ln_abs: UniformSpline::new(TABLE_LN_MIN, TABLE_STEP, ln_abs),
            phase: UniformSpline::new(TABLE_LN_MIN, TABLE_STEP, phase),
        })
    }

    fn pairs(&self) -> Vec<(f64, f64)> {
        (0..self.ln_abs.y.len())
            .map(|i| {
                let ln_y = self.ln_abs.x0 + i as f64 * self.ln_abs.h;
                (ln_y.exp(), self.ln_abs.y[i].exp())
            })
            .collect()
    }

    fn eval(&self, modulus: f64) -> Complex64 {
        let ln_y = modulus.ln();
        if ln_y > self.ln_abs.x_max() {
            return Complex64::new(0.0, 0.0);
        }
        if ln_y < self.ln_abs.x0 {
            // Power-law continuation from the first two nodes.
            let slope = (self.ln_abs.y[1] - self.ln_abs.y[0]) / self.ln_abs.h;
            let la = self.ln_abs.y[0] + slope * (ln_y - self.ln_abs.x0);
            return Complex64::from_polar(la.exp(), self.phase.y[0]);
        }
        Complex64::from_polar(self.ln_abs.eval(ln_y).exp(), self.phase.eval(ln_y))
    }
}

/// Write `(x, e(x))` pairs: a little-endian `u64` count followed by `f64` pairs.
pub fn write_table(path: &Path, pairs: &[(f64, f64)]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 16 * pairs.len());
    buf.extend_from_slice(&(pairs.len() as u64).to_le_bytes());
    for &(x, e) in pairs {
        buf.extend_from_slice(&x.to_le_bytes());
        buf.extend_from_slice(&e.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        return Err(Error::Io(format!("{}: truncated header", path.display())));
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 16 * count {
        return Err(Error::Io(format!(
            "{}: expected {} pairs, found {} bytes",
            path.display(),
            count,
            bytes.len() - 8
        )));
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Ok((0..count).map(|i| (f(8 + 16 * i), f(16 + 16 * i))).collect())
}

/// Cache file name for a tabulated kernel.
pub fn table_file_name(p: u32, q: u32, r: u32, d: f64, tol: f64) -> String {
    format!("kernel_p{p}_q{q}_r{r}_d{d:.6}_tol{tol:e}.bin")
}

#[derive(Debug)]
enum Evaluator {
    Closed {
        k: f64,
    },
    /// `e(z) = ∫_{e^{iδ}R+} k_o (uz)^{k_o} e^{−(uz)^{k_o}} e_inner(1/u) du/u`.
    Iterated {
        k_outer: f64,
        inner: Arc<KernelPair>,
        direction: f64,
        table: Option<RayTable>,
    },
    /// Inverse Laplace image of the `Γ_{r/(q+1)}` kernel under `Γ_{1/(q+1)}`.
    Contour {
        q1: f64,
        r: f64,
        ml: MittagLeffler,
        memo: RayMemo,
    },
}

/// Tables of a contour kernel, keyed by ray argument.
#[derive(Debug, Default)]
struct RayMemo {
    rays: Mutex<HashMap<u64, Option<Arc<RayTable>>>>,
}

/// The kernel pair `(e_m, E_m)` of a moment function `m` of order `1/k`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    m: MomentFunction,
    k: f64,
    depth: usize,
    eval: Arc<Evaluator>,
    big_e_ml: Option<MittagLeffler>,
    options: KernelOptions,
    key: Option<(u32, u32, u32)>,
}

/// `k z^k e^{−z^k}` on the cover.
fn closed_e(k: f64, z: CoverPoint) -> Complex64 {
    let zk = z.powf(k);
    if zk.re > 800.0 {
        return Complex64::new(0.0, 0.0);
    }
    k * zk * (-zk).exp()
}

impl KernelPair {
    pub fn moment(&self) -> &MomentFunction {
        &self.m
    }

    /// Summability order `k` (the moment order is `1/k`).
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn backing(&self) -> KernelBacking {
        match &*self.eval {
            Evaluator::Closed { .. } => KernelBacking::ClosedForm,
            Evaluator::Iterated { .. } => KernelBacking::IteratedQuadrature { depth: self.depth },
            Evaluator::Contour { .. } => KernelBacking::ContourQuadrature,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(&*self.eval, Evaluator::Closed { .. })
    }

    /// Half-opening `π/(2k)` of the sector `S_0(π/k)` on which `e` lives.
    pub fn half_opening(&self) -> f64 {
        PI / (2.0 * self.k)
    }

    fn quad_config(&self) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: 1e-300,
            rel_tol: self.options.tol,
            max_subdivisions: 400,
        }
    }

    fn accept(&self) -> f64 {
        100.0 * self.options.tol
    }

    /// `e_m(z)` at a point of the cover.
    pub fn e(&self, z: CoverPoint) -> Result<Complex64> {
        match &*self.eval {
            Evaluator::Closed { k } => Ok(closed_e(*k, z)),
            Evaluator::Iterated {
                k_outer,
                inner,
                direction,
                table,
            } => self.iterated_e(*k_outer, inner, *direction, table.as_ref(), z),
            Evaluator::Contour { q1, r, ml, memo } => self.memoized_contour_e(*q1, *r, ml, memo, z),
        }
    }

    /// `e_m(x)` for real `x > 0`.
    pub fn e_real(&self, x: f64) -> Result<f64> {
        Ok(self.e(CoverPoint::on_ray(x, 0.0))?.re)
    }

    fn iterated_e(
        &self,
        k_outer: f64,
        inner: &KernelPair,
        direction: f64,
        table: Option<&RayTable>,
        z: CoverPoint,
    ) -> Result<Complex64> {
        let theta = z.arg;
        let a = PI / (2.0 * k_outer);
        let b = inner.half_opening();
        if theta.abs() >= (a + b) * (1.0 - 1e-12) {
            return Err(Error::domain(format!(
                "iterated kernel evaluated at arg {theta:.6} outside |arg| < {:.6}",
                a + b
            )));
        }
        // The tabulated inner ray is used when admissible; otherwise the ray
        // splitting the argument between the two factors in proportion to
        // their half-openings.
        let admissible = (direction + theta).abs() < 0.9 * a && direction.abs() < 0.9 * b;
        let table = table.filter(|_| admissible);
        let delta = if table.is_some() { direction } else { -theta * b / (a + b) };
        let ln_z = z.modulus.ln();
        let w0 = -k_outer * ln_z / (k_outer + inner.k);
        let integrand = |w: f64| {
            let y = CoverPoint::on_ray((w + ln_z).exp(), delta + theta);
            let outer = closed_e(k_outer, y);
            if outer.norm() == 0.0 {
                return outer;
            }
            let inv_u = CoverPoint::on_ray((-w).exp(), -delta);
            let ei = match table {
                Some(t) => t.eval(inv_u.modulus),
                None => stash(inner.e(inv_u)),
            };
            outer * ei
        };
        let cfg = self.quad_config();
        with_pending(self.accept(), || {
            quadrature::integrate_support(integrand, w0, 0.5, (f64::NEG_INFINITY, f64::INFINITY), 1e-20, &cfg)
        })
        .map(|e| e.value)
    }

    fn memoized_contour_e(&self, q1: f64, r: f64, ml: &MittagLeffler, memo: &RayMemo, u: CoverPoint) -> Result<Complex64> {
        let table = memo
            .rays
            .lock()
            .expect("kernel memo poisoned")
            .get(&u.arg.to_bits())
            .cloned()
            .flatten();
        match table {
            Some(t) => Ok(t.eval(u.modulus)),
            None => self.contour_e(q1, r, ml, u),
        }
    }

    /// Tabulate `e` along `arg z = arg` ahead of a radial integral. Only
    /// contour-backed kernels keep tables; a failed build leaves the ray on
    /// direct evaluation.
    pub fn prepare_ray(&self, arg: f64) {
        if let Evaluator::Contour { q1, r, ml, memo } = &*self.eval {
            let mut rays = memo.rays.lock().expect("kernel memo poisoned");
            rays.entry(arg.to_bits()).or_insert_with(|| {
                RayTable::build_with(|z| self.contour_e(*q1, *r, ml, z), arg, self.options.tol)
                    .ok()
                    .map(Arc::new)
            });
        }
    }

    fn contour_e(&self, q1: f64, r: f64, ml: &MittagLeffler, u: CoverPoint) -> Result<Complex64> {
        let k1 = q1 / r;
        let beta = 0.5 * (PI / q1 + 0.1);
        let theta = u.arg;
        if theta.abs() >= PI / (2.0 * k1) - beta {
            return Err(Error::domain(format!(
                "contour kernel evaluated at arg {theta:.6} outside |arg| < {:.6}",
                PI / (2.0 * k1) - beta
            )));
        }
        let dc = -theta;
        let rho = (r * u.modulus.powf(-q1)).powf(r / (q1 * (r - 1.0)));
        let big_e = |w: Complex64| -> Result<Complex64> {
            if q1 == 1.0 {
                Ok(w.exp())
            } else {
                ml.eval(w)
            }
        };
        let f = |zp: CoverPoint| -> Complex64 {
            let inv_uz = u.mul(zp).recip().to_complex();
            let ez = match big_e(inv_uz) {
                Ok(v) => v,
                Err(e) => return stash(Err(e)),
            };
            let p = zp.recip().powf(k1);
            ez * k1 * p * (-p).exp()
        };
        let cfg = self.quad_config();
        let ln_rho = rho.ln();
        let leg = |phi: f64| {
            with_pending(self.accept(), || {
                quadrature::integrate_support(
                    |w: f64| f(CoverPoint::on_ray(w.exp(), phi)),
                    ln_rho - 1.0,
                    0.5,
                    (f64::NEG_INFINITY, ln_rho),
                    1e-20,
                    &cfg,
                )
            })
        };
        let out = leg(dc + beta)?.value;
        let back = leg(dc - beta)?.value;
        let arc_bps: Vec<f64> = (0..=16).map(|i| dc - beta + 2.0 * beta * i as f64 / 16.0).collect();
        let arc = with_pending(self.accept(), || {
            quadrature::integrate(|th: f64| f(CoverPoint::on_ray(rho, th)), &arc_bps, &cfg)
        })?
        .value;
        let i = Complex64::new(0.0, 1.0);
        let loop_integral = out - back - i * arc;
        Ok(-loop_integral / (2.0 * PI * i))
    }

    /// `E_m(z) = Σ zⁿ / m(n)`.
    pub fn big_e(&self, z: Complex64) -> Result<Complex64> {
        if let Some(ml) = &self.big_e_ml {
            if self.k == 1.0 {
                return Ok(z.exp());
            }
            return ml.eval(z);
        }
        if z.norm() == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let lz = z.ln();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        let mut largest: f64 = 0.0;
        let mut prev = f64::INFINITY;
        for n in 0..100_000usize {
            let term = if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                (lz * n as f64 - self.m.ln_eval(n as f64)).exp()
            };
            let y = term - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
            let mag = term.norm();
            largest = largest.max(mag);
            if n > 2 && mag < prev && mag <= 1e-18 * sum.norm().max(f64::MIN_POSITIVE) {
                let rounding = largest * 1e-16;
                if rounding > 1e-8 * sum.norm() {
                    return Err(Error::accuracy(
                        format!("E_m series at |z| = {:.3e} (cancellation)", z.norm()),
                        rounding / sum.norm(),
                        1e-8,
                    ));
                }
                return Ok(sum);
            }
            prev = mag;
        }
        Err(Error::accuracy("E_m series", f64::NAN, 1e-8))
    }

    /// Flatness constants along `arg z = phi`, `|phi| < π/(2k)`.
    pub fn flatness(&self, phi: f64) -> Result<Flatness> {
        if phi.abs() >= self.half_opening() {
            return Err(Error::domain(format!(
                "kernel is not flat along arg {phi:.6} (half-opening {:.6})",
                self.half_opening()
            )));
        }
        if let Evaluator::Closed { k } = &*self.eval {
            let c = (k * phi).cos();
            // k y e^{−c y} <= (2k/(c e)) e^{−c y / 2} with y = x^k.
            return Ok(Flatness {
                a: 2.0 * k / (c * std::f64::consts::E),
                b: (2.0 / c).powf(1.0 / k),
                k: *k,
            });
        }
        let k = self.k;
        let mut samples = Vec::new();
        let mut ln_x = -4.0f64;
        loop {
            let x = ln_x.exp();
            let v = match self.e(CoverPoint::on_ray(x, phi)) {
                Ok(v) => v.norm(),
                Err(_) if samples.len() >= 8 => break,
                Err(e) => return Err(e),
            };
            if v == 0.0 || v.ln() < -200.0 || ln_x > 40.0 {
                break;
            }
            samples.push((x, v.ln()));
            ln_x += 0.25;
        }
        if samples.len() < 4 {
            return Err(Error::accuracy("flatness sampling (too few samples)", f64::NAN, self.options.tol));
        }
        let n = samples.len();
        let (x1, l1) = samples[n - 3];
        let (x2, l2) = samples[n - 1];
        let c = -(l2 - l1) / (x2.powf(k) - x1.powf(k));
        if !(c > 0.0) {
            return Err(Error::accuracy("flatness fit (no decay)", c, 0.0));
        }
        let b = (1.15 / c).powf(1.0 / k);
        let ln_a = samples
            .iter()
            .map(|&(x, l)| l + (x / b).powf(k))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Flatness {
            a: 2.0 * ln_a.exp(),
            b,
            k,
        })
    }

    /// `∫_0^∞ x^{u−1} e(x) dx`.
    pub fn mellin(&self, u: f64) -> Result<Estimate> {
        let cfg = QuadratureConfig {
            abs_tol: 1e-300,
            rel_tol: 1e-10,
            max_subdivisions: 600,
        };
        self.prepare_ray(0.0);
        with_pending(1e-8, || {
            quadrature::integrate_support(
                |w: f64| {
                    let x = w.exp();
                    let e = stash(self.e(CoverPoint::on_ray(x, 0.0)));
                    e * (u * w).exp()
                },
                0.0,
                0.5,
                (f64::NEG_INFINITY, f64::INFINITY),
                1e-18,
                &cfg,
            )
        })
    }
}

/// `e(z) = k z^k e^{−z^k}`, `m(u) = Γ(1 + u/k)`, `E = 𝐄_{1/k}`.
pub fn kernel_closed_form(k: f64) -> Result<KernelPair> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("kernel order must be positive, got {k}")));
    }
    Ok(KernelPair {
        m: MomentFunction::gamma(1.0 / k),
        k,
        depth: 0,
        eval: Arc::new(Evaluator::Closed { k }),
        big_e_ml: Some(MittagLeffler::new(1.0 / k)?),
        options: KernelOptions::default(),
        key: None,
    })
}

/// One convolution layer with the closed kernel of order `k_outer`.
fn iterate_layer(
    inner: KernelPair,
    k_outer: f64,
    d: Direction,
    key: (u32, u32, u32),
    opts: &KernelOptions,
) -> Result<KernelPair> {
    let direction = d.theta();
    let m = inner.m.product(&MomentFunction::gamma(1.0 / k_outer));
    let k = 1.0 / (1.0 / k_outer + 1.0 / inner.k);
    if direction.abs() >= inner.half_opening() {
        return Err(Error::domain(format!(
            "integration direction {direction:.6} outside the inner kernel's sector |arg| < {:.6}",
            inner.half_opening()
        )));
    }
    let table = if inner.is_closed_form() {
        None
    } else {
        Some(load_or_build_table(&inner, 0.0 - direction, opts)?)
    };
    let depth = inner.depth + 1;
    Ok(KernelPair {
        m,
        k,
        depth,
        eval: Arc::new(Evaluator::Iterated {
            k_outer,
            inner: Arc::new(inner),
            direction,
            table,
        }),
        big_e_ml: None,
        options: opts.clone(),
        key: Some(key),
    })
}

fn load_or_build_table(inner: &KernelPair, direction: f64, opts: &KernelOptions) -> Result<RayTable> {
    let path = match (&opts.cache_dir, inner.key) {
        (Some(dir), Some((p, q, r))) if direction == 0.0 => Some(dir.join(table_file_name(p, q, r, direction, opts.tol))),
        _ => None,
    };
    if let Some(path) = &path {
        if let Ok(pairs) = read_table(path) {
            if let Some(t) = RayTable::from_pairs(&pairs) {
                return Ok(t);
            }
        }
    }
    let table = RayTable::build(inner, direction)?;
    if let Some(path) = &path {
        std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
        write_table(path, &table.pairs())?;
    }
    Ok(table)
}

/// Kernel of `m(u) = Γ(1 + u/(q+1))^{p−1}` (`k = (q+1)/(p−1)`).
pub fn kernel_iterated_case1(p: u32, q: u32, d: Direction) -> Result<KernelPair> {
    kernel_iterated_case1_with(p, q, d, &KernelOptions::default())
}

pub fn kernel_iterated_case1_with(p: u32, q: u32, d: Direction, opts: &KernelOptions) -> Result<KernelPair> {
    if p < 2 {
        return Err(Error::domain(format!("iterated Case 1 kernels need p >= 2, got {p}")));
    }
    check_cap(p, opts)?;
    let q1 = (q + 1) as f64;
    let mut kp = kernel_closed_form(q1)?;
    kp.key = Some((2, q, 0));
    kp.options = opts.clone();
    for layer in 3..=p {
        kp = iterate_layer(kp, q1, d, (layer, q, 0), opts)?;
    }
    Ok(kp)
}

/// Kernel of `m(u) = Γ(1 + ur/(q+1)) Γ(1 + u/(q+1))^{p−1}` (`k = (q+1)/(p−1+r)`).
pub fn kernel_iterated_case2(p: u32, q: u32, r: u32, d: Direction) -> Result<KernelPair> {
    kernel_iterated_case2_with(p, q, r, d, &KernelOptions::default())
}

pub fn kernel_iterated_case2_with(p: u32, q: u32, r: u32, d: Direction, opts: &KernelOptions) -> Result<KernelPair> {
    if r < 1 {
        return Err(Error::domain("Case 2 kernels need r >= 1"));
    }
    check_cap(p, opts)?;
    let q1 = (q + 1) as f64;
    let rf = r as f64;
    if p == 0 {
        if r == 1 {
            return Err(Error::domain("p = 0, r = 1 is a pure translation and has no kernel"));
        }
        let m = MomentFunction::gamma(rf / q1).quotient(&MomentFunction::gamma(1.0 / q1));
        return Ok(KernelPair {
            m,
            k: q1 / (rf - 1.0),
            depth: 1,
            eval: Arc::new(Evaluator::Contour {
                q1,
                r: rf,
                ml: MittagLeffler::new(1.0 / q1)?,
                memo: RayMemo::default(),
            }),
            big_e_ml: None,
            options: opts.clone(),
            key: Some((0, q, r)),
        });
    }
    let mut kp = kernel_closed_form(q1 / rf)?;
    kp.key = Some((1, q, r));
    kp.options = opts.clone();
    for layer in 2..=p {
        kp = iterate_layer(kp, q1, d, (layer, q, r), opts)?;
    }
    Ok(kp)
}

fn check_cap(p: u32, opts: &KernelOptions) -> Result<()> {
    if p > opts.max_p {
        Err(Error::domain(format!(
            "iterated kernels are limited to p <= {} (got p = {p})",
            opts.max_p
        )))
    } else {
        Ok(())
    }
}
