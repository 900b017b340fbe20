//! Directions, points and sectors on the universal cover of `C \ {0}`, plus
//! exponential growth classes.
//!
//! Arguments are never reduced modulo `2π`: a point of the cover is a pair
//! (modulus, argument) and two directions that differ by `2π` are different
//! directions. Constants such as `arg a` use the principal branch `(-π, π]`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A direction on the universal cover, in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(pub f64);

impl Direction {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() {
            Ok(Direction(theta))
        } else {
            Err(Error::validation(format!("direction must be finite, got {theta}")))
        }
    }

    #[inline]
    pub fn theta(self) -> f64 {
        self.0
    }

    /// Unit vector `e^{iθ}`.
    #[inline]
    pub fn unit(self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }

    pub fn offset(self, delta: f64) -> Direction {
        Direction(self.0 + delta)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A nonzero point of the universal cover of `C \ {0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub modulus: f64,
    pub arg: f64,
}

impl CoverPoint {
    pub fn new(modulus: f64, arg: f64) -> Result<Self> {
        if !(modulus > 0.0) || !modulus.is_finite() || !arg.is_finite() {
            return Err(Error::domain(format!(
                "cover point needs finite positive modulus and finite argument, got ({modulus}, {arg})"
            )));
        }
        Ok(CoverPoint { modulus, arg })
    }

    /// Point on the ray `e^{iθ} R_+` at distance `modulus` (no validation).
    #[inline]
    pub fn on_ray(modulus: f64, direction: f64) -> Self {
        CoverPoint {
            modulus,
            arg: direction,
        }
    }

    /// Lift of a nonzero complex number to the principal sheet.
    pub fn principal(z: Complex64) -> Result<Self> {
        CoverPoint::new(z.norm(), z.arg())
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.arg)
    }

    /// `self^e` computed from the cover argument, `|z|^e e^{i e arg z}`.
    #[inline]
    pub fn powf(self, e: f64) -> Complex64 {
        Complex64::from_polar(self.modulus.powf(e), e * self.arg)
    }

    /// `self^e` as a cover point.
    #[inline]
    pub fn pow_cover(self, e: f64) -> CoverPoint {
        CoverPoint {
            modulus: self.modulus.powf(e),
            arg: self.arg * e,
        }
    }

    #[inline]
    pub fn recip(self) -> CoverPoint {
        CoverPoint {
            modulus: 1.0 / self.modulus,
            arg: -self.arg,
        }
    }

    #[inline]
    pub fn mul(self, other: CoverPoint) -> CoverPoint {
        CoverPoint {
            modulus: self.modulus * other.modulus,
            arg: self.arg + other.arg,
        }
    }

    #[inline]
    pub fn div(self, other: CoverPoint) -> CoverPoint {
        CoverPoint {
            modulus: self.modulus / other.modulus,
            arg: self.arg - other.arg,
        }
    }

    #[inline]
    pub fn scale(self, factor: f64) -> CoverPoint {
        CoverPoint {
            modulus: self.modulus * factor,
            arg: self.arg,
        }
    }
}

/// `S_d(opening, radius)` on the universal cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub direction: Direction,
    pub opening: f64,
    /// May be `f64::INFINITY` for an unbounded sector.
    pub radius: f64,
}

impl Sector {
    pub fn new(direction: Direction, opening: f64, radius: f64) -> Result<Self> {
        if !(opening > 0.0) || !opening.is_finite() {
            return Err(Error::validation(format!("sector opening must be positive, got {opening}")));
        }
        if !(radius > 0.0) {
            return Err(Error::validation(format!("sector radius must be positive, got {radius}")));
        }
        Ok(Sector {
            direction,
            opening,
            radius,
        })
    }

    pub fn unbounded(direction: Direction, opening: f64) -> Result<Self> {
        Sector::new(direction, opening, f64::INFINITY)
    }

    /// Open-sector membership; both the boundary rays and the arc are excluded.
    pub fn contains(&self, t: CoverPoint) -> bool {
        let half = 0.5 * self.opening;
        let d = self.direction.theta();
        t.modulus > 0.0 && t.modulus < self.radius && t.arg > d - half && t.arg < d + half
    }
}

/// Sector membership test.
pub fn sector_contains(s: &Sector, t: CoverPoint) -> bool {
    s.contains(t)
}

/// Reduce an angle to `(-π, π]`.
pub fn principal_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Exponential growth class `O^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthClass {
    pub k: f64,
}

/// Constants attesting `|f(x)| <= c1 exp(c2 |x|^k)` on a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub c1: f64,
    pub c2: f64,
    /// Whether the bound fitted on the inner half of the samples still holds
    /// on the outer half.
    pub attested: bool,
}

impl GrowthClass {
    pub fn new(k: f64) -> Self {
        GrowthClass { k }
    }

    /// Fit `log|f| <= c2 |x|^k + log c1` on the samples with the smallest
    /// moduli and check that the bound (with 10% slack on `c2`) also covers
    /// the remaining samples. Samples are `(|x|, |f(x)|)`.
    pub fn attest(&self, samples: &[(f64, f64)]) -> Result<GrowthFit> {
        let mut pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|(x, f)| x.is_finite() && *x > 0.0 && f.is_finite() && *f > 0.0)
            .map(|&(x, f)| (x.powf(self.k), f.ln()))
            .collect();
        if pts.len() < 4 {
            return Err(Error::validation("growth attestation needs at least 4 usable samples"));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (inner, outer) = pts.split_at(pts.len() / 2);

        let n = inner.len() as f64;
        let mx = inner.iter().map(|p| p.0).sum::<f64>() / n;
        let my = inner.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = inner.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = inner.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let c2 = slope.max(0.0) + 1e-12;
        let log_c1 = inner
            .iter()
            .map(|p| p.1 - c2 * p.0)
            .fold(f64::NEG_INFINITY, f64::max);

        let slack = 1.1 * c2 + 1e-9;
        let attested = outer.iter().all(|p| p.1 <= log_c1 + slack * p.0 + 1e-9);
        Ok(GrowthFit {
            c1: log_c1.exp(),
            c2,
            attested,
        })
    }
}
