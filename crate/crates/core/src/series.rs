//! Sparse formal power series in `t` with `z`-dependent coefficients.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

type CoefficientFn = dyn Fn(usize, Complex64) -> Result<Complex64> + Send + Sync;

/// `Σ_n c_n(z) t^{n·stride}`.
///
/// Coefficients are produced on demand; index `n` is the position along the
/// stride, so the power of `t` is `n * stride`.
#[derive(Clone)]
pub struct FormalSeries {
    stride: usize,
    coefficient: Arc<CoefficientFn>,
}

impl fmt::Debug for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormalSeries").field("stride", &self.stride).finish_non_exhaustive()
    }
}

impl FormalSeries {
    pub fn new<F>(stride: usize, coefficient: F) -> Self
    where
        F: Fn(usize, Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        assert!(stride >= 1, "stride must be positive");
        FormalSeries {
            stride,
            coefficient: Arc::new(coefficient),
        }
    }

    /// Series with `z`-independent coefficients.
    pub fn from_fn<F>(stride: usize, coefficient: F) -> Self
    where
        F: Fn(usize) -> Complex64 + Send + Sync + 'static,
    {
        FormalSeries::new(stride, move |n, _| Ok(coefficient(n)))
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Coefficient of `t^{n·stride}`.
    pub fn coefficient(&self, n: usize, z: Complex64) -> Result<Complex64> {
        (self.coefficient)(n, z)
    }

    /// Coefficient of `t^j`; zero off the stride.
    pub fn coefficient_of_power(&self, j: usize, z: Complex64) -> Result<Complex64> {
        if j.is_multiple_of(self.stride) {
            self.coefficient(j / self.stride, z)
        } else {
            Ok(Complex64::new(0.0, 0.0))
        }
    }

    /// The first `count` stride coefficients at `z`.
    pub fn truncate(&self, count: usize, z: Complex64) -> Result<Vec<Complex64>> {
        (0..count).map(|n| self.coefficient(n, z)).collect()
    }

    /// Partial sum over all powers `j < power_bound`.
    pub fn partial_sum(&self, t: Complex64, z: Complex64, power_bound: usize) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        let tp = t.powu(self.stride as u32);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut n = 0;
        while n * self.stride < power_bound {
            acc += self.coefficient(n, z)? * pow;
            pow *= tp;
            n += 1;
        }
        Ok(acc)
    }

    /// Map every coefficient, keeping the stride.
    pub fn map<F>(&self, f: F) -> FormalSeries
    where
        F: Fn(usize, Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        let inner = self.coefficient.clone();
        FormalSeries {
            stride: self.stride,
            coefficient: Arc::new(move |n, z| {
                let c = inner(n, z)?;
                f(n, c)
            }),
        }
    }

    /// Sum of a convergent series by direct summation, stopping once the
    /// terms have been negligible for several consecutive indices.
    pub fn sum_convergent(&self, t: Complex64, z: Complex64, max_terms: usize) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        let tp = t.powu(self.stride as u32);
        let log_tp = if tp.norm() > 0.0 { tp.norm().ln() } else { f64::NEG_INFINITY };
        let mut quiet = 0;
        for n in 0..max_terms {
            let c = self.coefficient(n, z)?;
            let term = if c.norm() == 0.0 || (n > 0 && tp.norm() == 0.0) {
                Complex64::new(0.0, 0.0)
            } else if n == 0 {
                c
            } else {
                // c * tp^n without intermediate overflow of tp^n.
                let mag = c.norm().ln() + n as f64 * log_tp;
                Complex64::from_polar(mag.exp(), c.arg() + n as f64 * tp.arg())
            };
            if !term.re.is_finite() || !term.im.is_finite() {
                return Err(Error::accuracy("series summation (overflow)", f64::INFINITY, 0.0));
            }
            // Neumaier-compensated accumulation.
            let y = term - comp;
            let s = acc + y;
            comp = (s - acc) - y;
            acc = s;
            if term.norm() <= 1e-17 * acc.norm() || term.norm() == 0.0 {
                quiet += 1;
                if quiet >= 4 && n > 8 {
                    return Ok(acc);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::accuracy("series summation", f64::NAN, 1e-17))
    }
}
