//! Adaptive Gauss–Kronrod (G10/K21) integration of complex-valued integrands
//! over real intervals.
//!
//! Error estimates follow QUADPACK's `qk21` heuristics. Segment sums are
//! accumulated in left-endpoint order so results do not depend on the
//! refinement history.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_980,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances shared by every integration in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub(crate) fn target(&self, value: Complex64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

impl Estimate {
    pub fn zero() -> Self {
        Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        }
    }

    pub fn add(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    pub fn scale(self, factor: Complex64) -> Estimate {
        Estimate {
            value: self.value * factor,
            error: self.error * factor.norm(),
            evaluations: self.evaluations,
        }
    }
}

/// Why an adaptive integration stopped without meeting its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadFailure {
    /// The integrand returned a non-finite value at `at`.
    NonFinite { at: f64 },
    /// The worst segment could not be bisected further or the segment budget
    /// ran out. `narrow` is set when the worst segment shrank to round-off
    /// width, which signals a non-integrable point near `at`.
    NoConvergence {
        estimate: Estimate,
        at: f64,
        narrow: bool,
    },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

/// One G10/K21 panel on `[a, b]`.
fn kronrod21<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Result<Segment, QuadFailure> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    if !is_finite(fc) {
        return Err(QuadFailure::NonFinite { at: centre });
    }
    let mut resk = fc * WGK[10];
    let mut resg = Complex64::new(0.0, 0.0);
    let mut resabs = fc.norm() * WGK[10];
    let mut fv1 = [Complex64::new(0.0, 0.0); 10];
    let mut fv2 = [Complex64::new(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let x1 = centre - dx;
        let x2 = centre + dx;
        let f1 = f(x1);
        if !is_finite(f1) {
            return Err(QuadFailure::NonFinite { at: x1 });
        }
        let f2 = f(x2);
        if !is_finite(f2) {
            return Err(QuadFailure::NonFinite { at: x2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc - mean).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let h = half.abs();
    let value = resk * half;
    resabs *= h;
    resasc *= h;
    let mut error = ((resk - resg) * half).norm();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment { a, b, value, error })
}

#[inline]
fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn total(segments: &[Segment]) -> (Complex64, f64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for s in segments {
        value += s.value;
        error += s.error;
    }
    (value, error)
}

/// Integrate `f` over `[breakpoints[0], breakpoints[last]]`, starting from
/// one K21 panel per breakpoint interval and bisecting the worst panel until
/// the summed error estimate meets `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F>(mut f: F, breakpoints: &[f64], config: &QuadratureConfig) -> Result<Estimate, QuadFailure>
where
    F: FnMut(f64) -> Complex64,
{
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut evaluations = 0usize;
    let mut segments: Vec<Segment> = Vec::with_capacity(breakpoints.len() + 64);
    for w in breakpoints.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        segments.push(kronrod21(&mut f, w[0], w[1])?);
        evaluations += 21;
    }
    if segments.is_empty() {
        return Ok(Estimate::zero());
    }

    loop {
        let (value, error) = total(&segments);
        if error <= config.target(value) {
            segments.sort_by(|x, y| x.a.total_cmp(&y.a));
            let (value, error) = total(&segments);
            return Ok(Estimate {
                value,
                error,
                evaluations,
            });
        }
        let (worst, seg) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, s)| (i, *s))
            .expect("non-empty");
        let mid = 0.5 * (seg.a + seg.b);
        let width = (seg.b - seg.a).abs();
        let scale = seg.a.abs().max(seg.b.abs()).max(f64::MIN_POSITIVE);
        let narrow = width <= 1e3 * f64::EPSILON * scale || mid == seg.a || mid == seg.b;
        if narrow || segments.len() >= config.max_subdivisions {
            segments.sort_by(|x, y| x.a.total_cmp(&y.a));
            let (value, error) = total(&segments);
            return Err(QuadFailure::NoConvergence {
                estimate: Estimate {
                    value,
                    error,
                    evaluations,
                },
                at: mid,
                narrow,
            });
        }
        let left = kronrod21(&mut f, seg.a, mid)?;
        let right = kronrod21(&mut f, mid, seg.b)?;
        evaluations += 42;
        segments[worst] = left;
        segments.push(right);
    }
}

/// Geometric breakpoints `lo = x_0 < … < x_n = hi` with ratio at most `ratio`,
/// preceded by `0` when `include_zero` is set.
pub fn geometric_breakpoints(lo: f64, hi: f64, ratio: f64, include_zero: bool) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && ratio > 1.0);
    let n = ((hi / lo).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let step = (hi / lo).ln() / n as f64;
    let mut pts = Vec::with_capacity(n + 2);
    if include_zero {
        pts.push(0.0);
    }
    for i in 0..=n {
        pts.push(lo * (step * i as f64).exp());
    }
    *pts.last_mut().unwrap() = hi;
    pts
}

/// Integrate `f` over the part of `[lo, hi]` (either end may be infinite)
/// where it is not negligible.
///
/// The support is located by walking outward from `centre` in steps of
/// `step` until `|f|` has stayed below `cutoff` times the running maximum for
/// two consecutive steps. Breakpoints are placed at every step.
pub fn integrate_support<F>(
    mut f: F,
    centre: f64,
    step: f64,
    limits: (f64, f64),
    cutoff: f64,
    config: &QuadratureConfig,
) -> Result<Estimate, QuadFailure>
where
    F: FnMut(f64) -> Complex64,
{
    const MAX_STEPS: usize = 4000;
    let (lo_lim, hi_lim) = limits;
    let centre = centre.clamp(lo_lim, hi_lim);
    let f0 = f(centre);
    if !is_finite(f0) {
        return Err(QuadFailure::NonFinite { at: centre });
    }
    let mut peak = f0.norm();
    let mut walk = |dir: f64, limit: f64, peak: &mut f64| -> Result<f64, QuadFailure> {
        let mut w = centre;
        let mut quiet = 0;
        for _ in 0..MAX_STEPS {
            if (limit - w) * dir <= 0.0 {
                return Ok(limit);
            }
            w += dir * step;
            if (w - limit) * dir >= 0.0 {
                return Ok(limit);
            }
            let v = f(w);
            if !is_finite(v) {
                return Err(QuadFailure::NonFinite { at: w });
            }
            let m = v.norm();
            *peak = peak.max(m);
            if *peak == 0.0 && (w - centre).abs() > 50.0 * step {
                return Ok(w);
            }
            if *peak > 0.0 && m <= cutoff * *peak {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(w);
                }
            } else {
                quiet = 0;
            }
        }
        Err(QuadFailure::NoConvergence {
            estimate: Estimate::zero(),
            at: w,
            narrow: false,
        })
    };
    let hi = walk(1.0, hi_lim, &mut peak)?;
    let lo = walk(-1.0, lo_lim, &mut peak)?;
    if peak == 0.0 || hi <= lo {
        return Ok(Estimate::zero());
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let bps: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * (hi - lo) / n as f64 }).collect();
    integrate(f, &bps, config)
}
