//! The Cauchy problem `∂_t u = a (∂_t t)^p t^q ∂_z^r u`, `u(0, z) = φ(z)`:
//! formal solution, regime classification, closed forms and Gevrey fits.
//!
//! The operator is read right to left: `t^q ∂_z^r` acts first, then `p`
//! applications of `∂_t ∘ t`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::geometry::{CoverPoint, Direction};
use crate::moments::{kernel_iterated_case1, kernel_iterated_case2, KernelPair, MomentFunction};
use crate::series::FormalSeries;
use crate::special::ln_gamma;
use crate::transforms::{periodic_directions_near, BorelFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyProblem {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub a: Complex64,
    pub phi: InitialDatum,
}

impl CauchyProblem {
    pub fn new(p: u32, q: u32, r: u32, a: Complex64, phi: InitialDatum) -> Result<Self> {
        let cp = CauchyProblem { p, q, r, a, phi };
        cp.validate()?;
        Ok(cp)
    }

    /// Check `a ≠ 0`, the datum, and the Case 2 growth bound
    /// `ord φ <= r/(p−1+r)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.a.re.is_finite() && self.a.im.is_finite()) || self.a.norm() == 0.0 {
            return Err(Error::validation(format!("coefficient a must be finite and nonzero, got {}", self.a)));
        }
        self.phi.validate()?;
        if self.r >= 1 && self.p + self.r >= 2 {
            let bound = self.r as f64 / (self.p + self.r - 1) as f64;
            if self.phi.growth_order() > bound {
                return Err(Error::validation(format!(
                    "datum {} has growth order {} above r/(p-1+r) = {bound}",
                    self.phi.name(),
                    self.phi.growth_order()
                )));
            }
        }
        Ok(())
    }

    pub fn q1(&self) -> f64 {
        (self.q + 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    Entire1a,
    Convergent1b,
    Summable1c,
    Translation2a,
    Summable2,
}

impl RegimeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::Entire1a => "Entire1a",
            RegimeTag::Convergent1b => "Convergent1b",
            RegimeTag::Summable1c => "Summable1c",
            RegimeTag::Translation2a => "Translation2a",
            RegimeTag::Summable2 => "Summable2",
        }
    }

    pub fn is_summable(self) -> bool {
        matches!(self, RegimeTag::Summable1c | RegimeTag::Summable2)
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regime and summability index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub k: Option<f64>,
}

impl Regime {
    /// Expected Gevrey order `1/k`, or 0 for convergent regimes.
    pub fn gevrey_order(&self) -> f64 {
        self.k.map_or(0.0, |k| 1.0 / k)
    }
}

pub fn classify(cp: &CauchyProblem) -> Regime {
    let (p, r, q1) = (cp.p, cp.r, cp.q1());
    let (tag, k) = match (r, p) {
        (0, 0) => (RegimeTag::Entire1a, None),
        (0, 1) => (RegimeTag::Convergent1b, None),
        (0, _) => (RegimeTag::Summable1c, Some(q1 / (p - 1) as f64)),
        (1, 0) => (RegimeTag::Translation2a, None),
        _ => (RegimeTag::Summable2, Some(q1 / (p + r - 1) as f64)),
    };
    Regime { tag, k }
}

/// `û = Σ aⁿ (n!)^{p−1} (q+1)^{n(p−1)} φ^{(nr)}(z) t^{n(q+1)}`.
pub fn formal_solution(cp: &CauchyProblem) -> FormalSeries {
    let cp = cp.clone();
    let pm1 = cp.p as f64 - 1.0;
    let ln_q1 = cp.q1().ln();
    FormalSeries::new((cp.q + 1) as usize, move |n, z| {
        let deriv = cp.phi.eval_derivative(n as u32 * cp.r, z)?;
        if deriv == Complex64::new(0.0, 0.0) {
            return Ok(deriv);
        }
        let nf = n as f64;
        let scale = (pm1 * (ln_gamma(nf + 1.0) + nf * ln_q1)).exp();
        Ok(cp.a.powu(n as u32) * scale * deriv)
    })
}

/// The sum in closed form for the regimes that converge.
pub fn exact_sum(cp: &CauchyProblem, t: Complex64, z: Complex64) -> Result<Complex64> {
    let w = cp.a * t.powu(cp.q + 1);
    match classify(cp).tag {
        RegimeTag::Entire1a => Ok(cp.phi.eval(z)? * (w / cp.q1()).exp()),
        RegimeTag::Convergent1b => {
            if w.norm() >= 1.0 {
                return Err(Error::domain(format!(
                    "|a t^(q+1)| = {:.6} is not below 1; the closed form only holds inside the disc",
                    w.norm()
                )));
            }
            Ok(cp.phi.eval(z)? / (1.0 - w))
        }
        RegimeTag::Translation2a => cp.phi.eval_derivative_along(0, z, z + w / cp.q1()),
        tag => Err(Error::domain(format!("no closed-form sum in regime {tag}"))),
    }
}

/// Factor `A` with translates `z + ωʲ A s^{(q+1)/r}` (Case 2), or
/// `c = a (q+1)^{p−1}` with pole set `c s^{q+1} = 1` (Case 1).
fn borel_scale(cp: &CauchyProblem) -> Complex64 {
    let pm1 = cp.p as f64 - 1.0;
    match classify(cp).tag {
        RegimeTag::Summable2 => {
            let r = cp.r as f64;
            cp.a.powf(1.0 / r) * cp.q1().powf(pm1 / r)
        }
        _ => cp.a * cp.q1().powf(pm1),
    }
}

/// The `j`-th translate `ωʲ A s^{(q+1)/r}` with `s` carried on the cover.
pub fn case2_translate(cp: &CauchyProblem, j: u32, s: CoverPoint) -> Complex64 {
    let r = cp.r as f64;
    let omega = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / r);
    omega * borel_scale(cp) * s.powf(cp.q1() / r)
}

/// The Borel sum of `û` in closed form (Summable regimes).
pub fn borel_closed_form(cp: &CauchyProblem, s: CoverPoint, z: Complex64) -> Result<Complex64> {
    match classify(cp).tag {
        RegimeTag::Summable1c => {
            let den = 1.0 - borel_scale(cp) * s.powf(cp.q1());
            if den.norm() < 1e-14 {
                return Err(Error::SingularEvaluation(format!(
                    "Borel sum evaluated at its pole s = {}",
                    s.to_complex()
                )));
            }
            Ok(cp.phi.eval(z)? / den)
        }
        RegimeTag::Summable2 => {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..cp.r {
                acc += cp.phi.eval_derivative_along(0, z, z + case2_translate(cp, j, s))?;
            }
            Ok(acc / cp.r as f64)
        }
        tag => Err(Error::domain(format!("no Borel closed form in regime {tag}"))),
    }
}

/// Moment function of the regime, with summability index `k`.
pub fn regime_moment(cp: &CauchyProblem) -> Result<MomentFunction> {
    let q1 = cp.q1();
    match classify(cp).tag {
        RegimeTag::Summable1c => Ok(MomentFunction::gamma(1.0 / q1).power(cp.p - 1)),
        RegimeTag::Summable2 => {
            let first = MomentFunction::gamma(cp.r as f64 / q1);
            Ok(if cp.p == 0 {
                first.quotient(&MomentFunction::gamma(1.0 / q1))
            } else {
                first.product(&MomentFunction::gamma(1.0 / q1).power(cp.p - 1))
            })
        }
        tag => Err(Error::domain(format!("regime {tag} has no moment summation"))),
    }
}

/// The kernel pair of the regime, iterated along `d` where needed.
pub fn regime_kernel(cp: &CauchyProblem, d: Direction) -> Result<KernelPair> {
    match classify(cp).tag {
        RegimeTag::Summable1c => kernel_iterated_case1(cp.p, cp.q, d),
        RegimeTag::Summable2 => kernel_iterated_case2(cp.p, cp.q, cp.r, d),
        tag => Err(Error::domain(format!("regime {tag} has no kernel")))
    }
}

/// The closed-form Borel sum at a fixed `z`, as a [`BorelFunction`].
#[derive(Debug, Clone)]
pub struct ProblemBorel {
    cp: CauchyProblem,
    z: Complex64,
    tag: RegimeTag,
}

impl ProblemBorel {
    pub fn new(cp: &CauchyProblem, z: Complex64) -> Result<Self> {
        let tag = classify(cp).tag;
        if !tag.is_summable() {
            return Err(Error::domain(format!("regime {tag} has no Borel sum to integrate")));
        }
        if tag == RegimeTag::Summable2 {
            if let Some(z0) = cp.phi.singular_point() {
                if (z0 - z).norm() < 1e-12 {
                    return Err(Error::domain("z coincides with the singular point z0 of the datum"));
                }
            }
        }
        Ok(ProblemBorel {
            cp: cp.clone(),
            z,
            tag,
        })
    }

    pub fn problem(&self) -> &CauchyProblem {
        &self.cp
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// Base singular direction (`l = 0`) and spacing `2π/(q+1)`, or `None`
    /// when the Borel sum is entire.
    pub fn singular_lattice(&self) -> Option<(f64, f64)> {
        let q1 = self.cp.q1();
        let spacing = 2.0 * PI / q1;
        match self.tag {
            RegimeTag::Summable1c => Some((-self.cp.a.arg() / q1, spacing)),
            RegimeTag::Summable2 => {
                let z0 = self.cp.phi.singular_point()?;
                let theta = (z0 - self.z).arg();
                Some(((self.cp.r as f64 * theta - self.cp.a.arg()) / q1, spacing))
            }
            _ => None,
        }
    }
}

impl BorelFunction for ProblemBorel {
    fn eval(&self, s: CoverPoint) -> Result<Complex64> {
        borel_closed_form(&self.cp, s, self.z)
    }

    fn ray_bound(&self, direction: f64, rho: f64) -> f64 {
        let s = CoverPoint::on_ray(rho, direction);
        match self.tag {
            RegimeTag::Summable1c => {
                let phi = match self.cp.phi.eval(self.z) {
                    Ok(v) => v.norm(),
                    Err(_) => return f64::INFINITY,
                };
                let c = borel_scale(&self.cp);
                let psi = c.arg() + self.cp.q1() * direction;
                let reach = c.norm() * rho.powf(self.cp.q1());
                let dist = if psi.cos() <= 0.0 {
                    1.0
                } else if reach >= psi.cos() {
                    psi.sin().abs()
                } else {
                    (1.0 - Complex64::from_polar(reach, psi)).norm()
                };
                phi / dist
            }
            _ => {
                let total: f64 = (0..self.cp.r)
                    .map(|j| {
                        let end = self.z + case2_translate(&self.cp, j, s);
                        self.cp.phi.segment_bound(self.z, end)
                    })
                    .sum();
                total / self.cp.r as f64
            }
        }
    }

    fn singular_directions_near(&self, d: f64, radius: f64) -> Vec<f64> {
        match self.singular_lattice() {
            Some((base, spacing)) => periodic_directions_near(&[base], spacing, d, radius),
            None => Vec::new(),
        }
    }
}

/// Result of [`gevrey_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyEstimate {
    pub order: f64,
    /// Too few nonzero coefficients to fit; `order` is then 0.
    pub degenerate: bool,
}

/// Least-squares fit of `ln|c_j| ≈ s·j ln j + βj + γ` over the powers
/// `j = n·stride`, `1 <= n < count`.
pub fn gevrey_estimate(fs: &FormalSeries, z: Complex64, count: usize) -> Result<GevreyEstimate> {
    if count < 20 {
        return Err(Error::validation(format!("Gevrey fit needs at least 20 coefficients, got {count}")));
    }
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for n in 1..count {
        let c = fs.coefficient(n, z)?;
        if c.norm() == 0.0 || !c.norm().is_finite() {
            continue;
        }
        let j = (n * fs.stride()) as f64;
        rows.push(vec![j * j.ln(), j, 1.0]);
        ys.push(c.norm().ln());
    }
    if rows.len() < 6 {
        return Ok(GevreyEstimate {
            order: 0.0,
            degenerate: true,
        });
    }
    let beta = crate::fit::least_squares(&rows, &ys).ok_or_else(|| Error::accuracy("Gevrey fit", f64::NAN, 0.0))?;
    Ok(GevreyEstimate {
        order: beta[0],
        degenerate: false,
    })
}

/// Bivariate polynomial `Σ c[j][i] tʲ zⁱ` with rational coefficients.
pub type RationalSeries = Vec<Vec<BigRational>>;

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn derive_z(poly: &[BigRational], times: u32) -> Vec<BigRational> {
    let mut out = poly.to_vec();
    for _ in 0..times {
        out = out
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(i.into()))
            .collect();
    }
    out
}

/// The formal solution truncated at `t^{power_bound}` (inclusive), for a
/// polynomial datum and rational `a`.
pub fn truncated_solution_exact(
    p: u32,
    q: u32,
    r: u32,
    a: &BigRational,
    phi: &[BigRational],
    power_bound: usize,
) -> RationalSeries {
    let q1 = (q + 1) as usize;
    let mut out = vec![Vec::new(); power_bound + 1];
    for n in 0..=power_bound / q1 {
        let nf = factorial(n as u32);
        let base = BigRational::from_integer(nf * BigInt::from(q1).pow(n as u32));
        let scale = match p {
            0 => base.recip(),
            _ => num_traits::pow(base, p as usize - 1),
        };
        let factor = num_traits::pow(a.clone(), n) * scale;
        out[n * q1] = derive_z(phi, n as u32 * r).into_iter().map(|c| c * &factor).collect();
    }
    out
}

/// `∂_t u − a (∂_t t)^p t^q ∂_z^r u` for a truncated series, applied term
/// by term. Only powers below `len − q − 1` are meaningful.
pub fn apply_operator_exact(p: u32, q: u32, r: u32, a: &BigRational, u: &RationalSeries) -> RationalSeries {
    let len = u.len();
    let mut lhs: RationalSeries = vec![Vec::new(); len];
    for j in 1..len {
        lhs[j - 1] = u[j].iter().map(|c| c * BigRational::from_integer(j.into())).collect();
    }
    // t^q ∂_z^r
    let mut rhs: RationalSeries = vec![Vec::new(); len + q as usize + p as usize + 1];
    for (j, poly) in u.iter().enumerate() {
        rhs[j + q as usize] = derive_z(poly, r);
    }
    for _ in 0..p {
        // ∂_t ∘ t : t^j ↦ (j+1) t^j
        for (j, poly) in rhs.iter_mut().enumerate() {
            let f = BigRational::from_integer((j + 1).into());
            for c in poly.iter_mut() {
                *c *= &f;
            }
        }
    }
    let mut out = vec![Vec::new(); len];
    for j in 0..len {
        let a_rhs: Vec<BigRational> = rhs[j].iter().map(|c| c * a).collect();
        let n = lhs[j].len().max(a_rhs.len());
        let mut poly = vec![BigRational::zero(); n];
        for (i, c) in lhs[j].iter().enumerate() {
            poly[i] += c;
        }
        for (i, c) in a_rhs.iter().enumerate() {
            poly[i] -= c;
        }
        out[j] = poly;
    }
    out
}

/// Powers `j < power_bound − q` at which the residual of the truncated
/// formal solution is not identically zero.
pub fn exact_residual_failures(p: u32, q: u32, r: u32, a: &BigRational, phi: &[BigRational], power_bound: usize) -> Vec<usize> {
    let u = truncated_solution_exact(p, q, r, a, phi, power_bound);
    let res = apply_operator_exact(p, q, r, a, &u);
    let valid = power_bound.saturating_sub(q as usize);
    res.iter()
        .take(valid)
        .enumerate()
        .filter(|(_, poly)| poly.iter().any(|c| !c.is_zero()))
        .map(|(j, _)| j)
        .collect()
}
