//! Globally adaptive Gauss–Kronrod (7/15) quadrature and the three scaled
//! integral families used by the exact solution:
//!
//! ```text
//! gaussian_tail(a)  = ∫₀¹ exp(a(1 − 1/t²)) / t² dt   = eᵃ ∫₁^∞ e^{-a u²} du
//! exp_integral(a)   = ∫₀¹ exp(a(1 − 1/t)) / t dt     = eᵃ E₁(a)
//! gaussian_head(a)  = ∫₀¹ exp(a(1 − u²)) du          = eᵃ ∫₀¹ e^{-a u²} du
//! ```
//!
//! The `eᵃ` factor is folded into the integrand so the first two stay O(1/a)
//! instead of underflowing for large `a`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest argument accepted by the tail and exponential-integral families;
/// both diverge as `a → 0`.
pub const MIN_ARG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::invalid("max_subdivisions must be >= 1"));
        }
        Ok(())
    }
}

/// Argument of the scaled integral families; finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct IntegralArg(f64);

impl IntegralArg {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 {
            Ok(Self(a))
        } else {
            Err(Error::invalid(format!("integral argument must be finite and > 0, got {a}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

// Kronrod 15-point abscissae (descending, last is the centre) and weights;
// odd indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        finite &= pair.is_finite();
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    if !finite {
        return Err(Error::AccuracyFailure(format!(
            "non-finite integrand on [{lo:e}, {hi:e}]"
        )));
    }
    Ok(Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrate `f` over `[lo, hi]` until the summed rule-pair error estimate is
/// at most `max(abs_tol, rel_tol·|result|)`.
pub fn adaptive_integrate<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    adaptive_integrate_with_breaks(f, &[lo, hi], spec)
}

/// As [`adaptive_integrate`], starting from the segments between consecutive
/// `breaks`. Seeding breaks near a narrow peak keeps the first pass from
/// sampling right past it.
pub fn adaptive_integrate_with_breaks<F>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if breaks.len() < 2 || breaks.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("need at least two finite integration limits"));
    }
    if breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(format!(
            "need finite lo < hi, got [{}, {}]",
            breaks[0],
            breaks[breaks.len() - 1]
        )));
    }

    let mut heap = BinaryHeap::with_capacity(breaks.len() + 2 * spec.max_subdivisions);
    for w in breaks.windows(2) {
        heap.push(gauss_kronrod(&f, w[0], w[1])?);
    }
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut total_err: f64 = heap.iter().map(|s| s.error).sum();
    let mut splits = 0usize;

    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            return Ok(total);
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::AccuracyFailure(format!(
                "error estimate {total_err:e} above target {target:e} after {splits} subdivisions"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval at machine resolution; it cannot be refined further.
            return Err(Error::AccuracyFailure(format!(
                "interval [{:e}, {:e}] cannot be split further",
                worst.lo, worst.hi
            )));
        }
        let left = gauss_kronrod(&f, worst.lo, mid)?;
        let right = gauss_kronrod(&f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;

        // Running sums drift; resync once in a while.
        if splits % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

fn checked_arg(a: f64) -> Result<f64> {
    let a = IntegralArg::new(a)?.get();
    if a < MIN_ARG {
        return Err(Error::invalid(format!(
            "argument {a:e} below {MIN_ARG:e}, where the integral diverges"
        )));
    }
    Ok(a)
}

/// Breaks on (0, 1) that close in geometrically on a peak of width `width`
/// at `centre` (either 0 or 1).
fn peak_breaks(centre: f64, width: f64) -> Vec<f64> {
    let mut inner = Vec::new();
    let mut d = width;
    while d < 0.5 {
        inner.push(if centre == 0.0 { d } else { 1.0 - d });
        d *= 4.0;
    }
    if centre != 0.0 {
        inner.reverse();
    }
    let mut breaks = Vec::with_capacity(inner.len() + 2);
    breaks.push(0.0);
    breaks.extend(inner);
    breaks.push(1.0);
    breaks
}

/// `∫₀¹ exp(a(1 − 1/t²))/t² dt`, i.e. `eᵃ·∫₁^∞ exp(−a u²) du`.
pub fn gaussian_tail(a: f64, spec: &QuadratureSpec) -> Result<f64> {
    let a = checked_arg(a)?;
    adaptive_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let inv2 = 1.0 / (t * t);
            (a * (1.0 - inv2)).exp() * inv2
        },
        &peak_breaks(1.0, 0.25 / a),
        spec,
    )
}

/// `∫₀¹ exp(a(1 − 1/t))/t dt`, i.e. `eᵃ·E₁(a)`.
pub fn exp_integral(a: f64, spec: &QuadratureSpec) -> Result<f64> {
    let a = checked_arg(a)?;
    adaptive_integrate_with_breaks(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let inv = 1.0 / t;
            (a * (1.0 - inv)).exp() * inv
        },
        &peak_breaks(1.0, 0.5 / a),
        spec,
    )
}

/// `∫₀¹ exp(a(1 − u²)) du`, i.e. `eᵃ·∫₀¹ exp(−a u²) du`. Accepts `a = 0`.
pub fn gaussian_head(a: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::invalid(format!("argument must be finite and >= 0, got {a}")));
    }
    let breaks = if a > 0.0 {
        peak_breaks(0.0, 0.5 / a.sqrt())
    } else {
        vec![0.0, 1.0]
    };
    adaptive_integrate_with_breaks(|u| (a * (1.0 - u * u)).exp(), &breaks, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{erf, erfcx, scaled_exp_int_e1};
    use std::f64::consts::PI;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn tail_oracle(a: f64) -> f64 {
        (PI / (4.0 * a)).sqrt() * erfcx(a.sqrt())
    }

    fn head_oracle(a: f64) -> f64 {
        a.exp() * (PI / (4.0 * a)).sqrt() * erf(a.sqrt())
    }

    #[test]
    fn kernel_trivial_integrands() {
        assert!((adaptive_integrate(|_| 1.0, 0.0, 1.0, &q()).unwrap() - 1.0).abs() < 1e-15);
        assert!((adaptive_integrate(|u| u, 0.0, 1.0, &q()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_gaussian_against_erf() {
        let got = adaptive_integrate(|u| (-u * u).exp(), 0.0, 1.0, &q()).unwrap();
        let want = PI.sqrt() / 2.0 * erf(1.0);
        assert!(rel(got, want) < 1e-12);
        assert!((got - 0.746_824).abs() < 1e-6);
    }

    #[test]
    fn kernel_rejects_bad_interval() {
        assert!(matches!(
            adaptive_integrate(|u| u, 1.0, 0.0, &q()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn kernel_reports_exhausted_budget() {
        let tight = QuadratureSpec {
            rel_tol: 1e-15,
            abs_tol: 1e-300,
            max_subdivisions: 2,
        };
        let res = adaptive_integrate(|u| u.sqrt(), 0.0, 1.0, &tight);
        assert!(matches!(res, Err(Error::AccuracyFailure(_))));
    }

    #[test]
    fn kernel_reports_non_finite_integrand() {
        let res = adaptive_integrate(|u| 1.0 / (u - 0.5), 0.0, 1.0, &q());
        assert!(res.is_err());
    }

    #[test]
    fn settings_validation() {
        let bad = QuadratureSpec {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            max_subdivisions: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tail_examples() {
        let v = gaussian_tail(1.0, &q()).unwrap();
        assert!((v - 0.378_94).abs() < 1e-5);
        assert!(rel(v, tail_oracle(1.0)) < 1e-10);
        assert!(rel(gaussian_tail(12.582, &q()).unwrap(), tail_oracle(12.582)) < 1e-8);
        let big = gaussian_tail(100.0, &q()).unwrap();
        assert!(rel(big, 1.0 / 200.0) < 0.01);
    }

    #[test]
    fn exp_integral_examples() {
        let v = exp_integral(1.0, &q()).unwrap();
        assert!((v - 0.596_34).abs() < 1e-5);
        assert!(rel(v, scaled_exp_int_e1(1.0)) < 1e-10);
        let big = exp_integral(100.0, &q()).unwrap();
        assert!(rel(big, 0.01 * (1.0 - 0.01)) < 0.01);
        assert!(rel(exp_integral(25.16, &q()).unwrap(), scaled_exp_int_e1(25.16)) < 1e-8);
    }

    #[test]
    fn head_examples() {
        assert_eq!(gaussian_head(0.0, &q()).unwrap(), 1.0);
        let v = gaussian_head(1.0, &q()).unwrap();
        assert!((v - 2.030_08).abs() < 1e-5);
        assert!(rel(gaussian_head(0.12582, &q()).unwrap(), head_oracle(0.12582)) < 1e-8);
    }

    #[test]
    fn rejects_bad_arguments() {
        for a in [0.0, -1.0, f64::NAN, f64::INFINITY, 1e-13] {
            assert!(gaussian_tail(a, &q()).is_err(), "tail {a}");
            assert!(exp_integral(a, &q()).is_err(), "e1 {a}");
        }
        assert!(gaussian_head(-1.0, &q()).is_err());
        assert!(gaussian_head(f64::NAN, &q()).is_err());
        assert!(IntegralArg::new(2.0).is_ok());
    }

    #[test]
    fn peak_breaks_are_sorted() {
        for (c, w) in [(1.0, 1e-5), (0.0, 1e-3), (1.0, 2.0)] {
            let b = peak_breaks(c, w);
            assert_eq!(b[0], 0.0);
            assert_eq!(*b.last().unwrap(), 1.0);
            assert!(b.windows(2).all(|p| p[0] < p[1]), "{b:?}");
        }
    }

    #[test]
    fn narrow_peaks_are_not_missed() {
        for a in [1e3, 5e4, 1e6] {
            assert!(rel(gaussian_tail(a, &q()).unwrap(), tail_oracle(a)) < 1e-8, "{a}");
            assert!(rel(exp_integral(a, &q()).unwrap(), scaled_exp_int_e1(a)) < 1e-8, "{a}");
        }
    }

    #[test]
    fn stable_up_to_700() {
        for a in [300.0, 500.0, 700.0] {
            let t = gaussian_tail(a, &q()).unwrap();
            let e = exp_integral(a, &q()).unwrap();
            let h = gaussian_head(a, &q()).unwrap();
            assert!(t.is_finite() && t > 0.0);
            assert!(e.is_finite() && e > 0.0);
            assert!(h.is_finite() && h > 0.0);
            assert!(rel(t, tail_oracle(a)) < 1e-8);
            assert!(rel(e, scaled_exp_int_e1(a)) < 1e-8);
        }
    }

    #[test]
    fn very_small_argument_still_converges() {
        let a = 1e-6;
        assert!(rel(gaussian_tail(a, &q()).unwrap(), tail_oracle(a)) < 1e-8);
        assert!(rel(exp_integral(a, &q()).unwrap(), scaled_exp_int_e1(a)) < 1e-8);
    }
}
