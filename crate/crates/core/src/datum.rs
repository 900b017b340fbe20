//! Catalog of initial data `u(0, z) = φ(z)` with exact derivatives.
//!
//! Every variant knows its singular point and its growth order, which the
//! Stokes analysis consumes. Branch-type data are evaluated on the principal
//! branch unless a base point is supplied, in which case the value is the
//! analytic continuation along the straight segment from the base point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this distance to the singular point an evaluation is refused.
const SINGULAR_RADIUS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", deny_unknown_fields)]
pub enum InitialDatum {
    /// `Σ c_i z^i`, ascending powers.
    Polynomial(PolynomialParams),
    /// `e^{λ z}`.
    Exp(ExpParams),
    /// `1/(z0 − z)^m`, `m >= 1`.
    Rational(RationalParams),
    /// `(z0 − z)^α` with `α ∉ N_0`.
    PowerBranch(PowerBranchParams),
    /// `log(z0 − z)`.
    LogBranch(LogBranchParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialParams {
    pub coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpParams {
    pub lambda: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalParams {
    pub z0: Complex64,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBranchParams {
    pub z0: Complex64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogBranchParams {
    pub z0: Complex64,
}

impl InitialDatum {
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        InitialDatum::Polynomial(PolynomialParams { coeffs })
    }

    pub fn constant(c: f64) -> Self {
        InitialDatum::polynomial(vec![Complex64::new(c, 0.0)])
    }

    pub fn exp(lambda: Complex64) -> Self {
        InitialDatum::Exp(ExpParams { lambda })
    }

    pub fn rational(z0: Complex64, m: u32) -> Result<Self> {
        let d = InitialDatum::Rational(RationalParams { z0, m });
        d.validate()?;
        Ok(d)
    }

    pub fn power_branch(z0: Complex64, alpha: f64) -> Result<Self> {
        let d = InitialDatum::PowerBranch(PowerBranchParams { z0, alpha });
        d.validate()?;
        Ok(d)
    }

    pub fn log_branch(z0: Complex64) -> Result<Self> {
        let d = InitialDatum::LogBranch(LogBranchParams { z0 });
        d.validate()?;
        Ok(d)
    }

    /// Check the variant invariants. Deserialized values should be validated
    /// before use.
    pub fn validate(&self) -> Result<()> {
        let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        match self {
            InitialDatum::Polynomial(p) => {
                if p.coeffs.is_empty() || !p.coeffs.iter().all(finite) {
                    return Err(Error::validation("polynomial needs at least one finite coefficient"));
                }
            }
            InitialDatum::Exp(e) => {
                if !finite(&e.lambda) {
                    return Err(Error::validation("exp rate must be finite"));
                }
            }
            InitialDatum::Rational(r) => {
                if r.m == 0 {
                    return Err(Error::validation("rational pole order must be >= 1"));
                }
                if !finite(&r.z0) {
                    return Err(Error::validation("singular point must be finite"));
                }
            }
            InitialDatum::PowerBranch(b) => {
                if !b.alpha.is_finite() || (b.alpha >= 0.0 && b.alpha.fract() == 0.0) {
                    return Err(Error::validation(format!(
                        "power-branch exponent must not be a non-negative integer, got {}",
                        b.alpha
                    )));
                }
                if !finite(&b.z0) {
                    return Err(Error::validation("singular point must be finite"));
                }
            }
            InitialDatum::LogBranch(l) => {
                if !finite(&l.z0) {
                    return Err(Error::validation("singular point must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialDatum::Polynomial(_) => "Polynomial",
            InitialDatum::Exp(_) => "Exp",
            InitialDatum::Rational(_) => "Rational",
            InitialDatum::PowerBranch(_) => "PowerBranch",
            InitialDatum::LogBranch(_) => "LogBranch",
        }
    }

    /// The singular point `z0`, absent for entire data.
    pub fn singular_point(&self) -> Option<Complex64> {
        match self {
            InitialDatum::Polynomial(_) | InitialDatum::Exp(_) => None,
            InitialDatum::Rational(r) => Some(r.z0),
            InitialDatum::PowerBranch(b) => Some(b.z0),
            InitialDatum::LogBranch(l) => Some(l.z0),
        }
    }

    /// Order of exponential growth: on `C` for entire data, on the universal
    /// cover of `C \ {z0}` otherwise.
    pub fn growth_order(&self) -> f64 {
        match self {
            InitialDatum::Exp(_) => 1.0,
            _ => 0.0,
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.eval_derivative(0, z)
    }

    /// Closed-form evaluator of the `n`-th derivative.
    pub fn derivative(&self, n: u32) -> DatumDerivative<'_> {
        DatumDerivative { datum: self, n }
    }

    /// `φ^{(n)}(z)` on the principal branch.
    pub fn eval_derivative(&self, n: u32, z: Complex64) -> Result<Complex64> {
        self.eval_derivative_impl(n, z, None)
    }

    /// `φ^{(n)}(z)` continued along the segment `[base, z]`, starting from the
    /// principal branch at `base`. Identical to [`Self::eval_derivative`] for
    /// single-valued data.
    pub fn eval_derivative_along(&self, n: u32, base: Complex64, z: Complex64) -> Result<Complex64> {
        self.eval_derivative_impl(n, z, Some(base))
    }

    fn eval_derivative_impl(&self, n: u32, z: Complex64, base: Option<Complex64>) -> Result<Complex64> {
        match self {
            InitialDatum::Polynomial(p) => Ok(poly_derivative(&p.coeffs, n, z)),
            InitialDatum::Exp(e) => Ok(e.lambda.powu(n) * (e.lambda * z).exp()),
            InitialDatum::Rational(r) => {
                let w = checked_offset(r.z0, z)?;
                // (m)_n / w^{m+n}, accumulated factor by factor.
                let inv = w.inv();
                let mut value = inv.powu(r.m);
                for i in 0..n {
                    value *= (r.m + i) as f64 * inv;
                }
                Ok(value)
            }
            InitialDatum::PowerBranch(b) => {
                let w = checked_offset(b.z0, z)?;
                let logw = continued_log(b.z0, w, base);
                let inv = w.inv();
                let mut value = (b.alpha * logw).exp();
                for i in 0..n {
                    value *= -(b.alpha - i as f64) * inv;
                }
                Ok(value)
            }
            InitialDatum::LogBranch(l) => {
                let w = checked_offset(l.z0, z)?;
                if n == 0 {
                    return Ok(continued_log(l.z0, w, base));
                }
                // −(n−1)!/w^n
                let inv = w.inv();
                let mut value = -inv;
                for i in 1..n {
                    value *= i as f64 * inv;
                }
                Ok(value)
            }
        }
    }

    /// An upper bound for `|φ^{(n)}(z)|` at a point, robust against
    /// accidental zeros (used for quadrature tail budgets).
    pub fn abs_bound(&self, n: u32, base: Complex64, z: Complex64) -> Result<f64> {
        match self {
            InitialDatum::Polynomial(p) => {
                let r = z.norm();
                let mut total = 0.0;
                for (i, c) in p.coeffs.iter().enumerate().skip(n as usize) {
                    let falling: f64 = ((i - n as usize + 1)..=i).map(|j| j as f64).product();
                    total += c.norm() * falling * r.powi((i - n as usize) as i32);
                }
                Ok(total)
            }
            InitialDatum::LogBranch(l) if n == 0 => {
                let w = checked_offset(l.z0, z)?;
                let logw = continued_log(l.z0, w, Some(base));
                Ok(logw.re.abs() + logw.im.abs() + std::f64::consts::PI)
            }
            _ => Ok(self.eval_derivative_along(n, base, z)?.norm()),
        }
    }
    /// An upper bound for `sup |φ|` on the segment `[from, to]`, with `φ`
    /// continued along the segment from the principal branch at `from`.
    /// Infinite when the segment meets `z0`.
    pub fn segment_bound(&self, from: Complex64, to: Complex64) -> f64 {
        let dist = |z0: Complex64| segment_distance(z0, from, to);
        let far = |z0: Complex64| (z0 - from).norm().max((z0 - to).norm());
        match self {
            InitialDatum::Polynomial(p) => {
                let r = from.norm().max(to.norm());
                p.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
            }
            InitialDatum::Exp(e) => (e.lambda * from).re.max((e.lambda * to).re).exp(),
            InitialDatum::Rational(r) => dist(r.z0).powi(-(r.m as i32)),
            InitialDatum::PowerBranch(b) => {
                let d = dist(b.z0);
                if d == 0.0 {
                    f64::INFINITY
                } else if b.alpha < 0.0 {
                    d.powf(b.alpha)
                } else {
                    far(b.z0).powf(b.alpha)
                }
            }
            InitialDatum::LogBranch(l) => {
                let d = dist(l.z0);
                if d == 0.0 {
                    return f64::INFINITY;
                }
                let ln = d.ln().abs().max(far(l.z0).ln().abs());
                ln + (l.z0 - from).arg().abs() + std::f64::consts::PI
            }
        }
    }
}

/// Distance from `z0` to the segment `[a, b]`.
fn segment_distance(z0: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    let s = if len2 == 0.0 {
        0.0
    } else {
        ((z0 - a) * ab.conj()).re.clamp(0.0, len2) / len2
    };
    (z0 - (a + ab * s)).norm()
}

fn checked_offset(z0: Complex64, z: Complex64) -> Result<Complex64> {
    let w = z0 - z;
    if w.norm() <= SINGULAR_RADIUS {
        Err(Error::SingularEvaluation(format!(
            "initial datum evaluated at its singular point z0 = {z0}"
        )))
    } else {
        Ok(w)
    }
}

/// `log(z0 − z)` with the argument continued from `z0 − base`.
fn continued_log(z0: Complex64, w: Complex64, base: Option<Complex64>) -> Complex64 {
    match base {
        None => w.ln(),
        Some(b) => {
            let w0 = z0 - b;
            if w0.norm() <= SINGULAR_RADIUS {
                return w.ln();
            }
            let arg = w0.arg() + (w / w0).arg();
            Complex64::new(w.norm().ln(), arg)
        }
    }
}

fn poly_derivative(coeffs: &[Complex64], n: u32, z: Complex64) -> Complex64 {
    let n = n as usize;
    if n >= coeffs.len() {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in (n..coeffs.len()).rev() {
        let falling: f64 = ((i - n + 1)..=i).map(|j| j as f64).product();
        acc = acc * z + coeffs[i] * falling;
    }
    acc
}

/// A borrowed closed-form evaluator of `φ^{(n)}`.
#[derive(Debug, Clone, Copy)]
pub struct DatumDerivative<'a> {
    datum: &'a InitialDatum,
    n: u32,
}

impl DatumDerivative<'_> {
    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.datum.eval_derivative(self.n, z)
    }

    pub fn eval_along(&self, base: Complex64, z: Complex64) -> Result<Complex64> {
        self.datum.eval_derivative_along(self.n, base, z)
    }
}

/// Exact `n`-th derivative evaluator of a catalog datum.
pub fn datum_derivative(phi: &InitialDatum, n: u32) -> DatumDerivative<'_> {
    phi.derivative(n)
}
