//! Reference implementations of erf, erfc and the exponential integral E₁.
//!
//! These exist to check the quadrature path against closed forms; nothing in
//! the production solve calls them. Each routine switches between a power
//! series and a continued fraction at a point where both branches are good to
//! better than 1e-12 relative.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_CUTOFF: f64 = 2.0;
const MAX_TERMS: usize = 500;

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < SERIES_CUTOFF {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < SERIES_CUTOFF {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// Scaled complementary error function `exp(x²)·erfc(x)` for `x ≥ 0`.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0, "erfcx defined here for x >= 0 only");
    if x < SERIES_CUTOFF {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        erfcx_cf(x)
    }
}

/// Exponential integral `E₁(x) = ∫₁^∞ e^{-xs}/s ds` for `x > 0`.
pub fn exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * scaled_e1_cf(x)
    }
}

/// `exp(x)·E₁(x)` for `x > 0`, finite for large `x`.
pub fn scaled_exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        x.exp() * e1_series(x)
    } else {
        scaled_e1_cf(x)
    }
}

// erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1)); all terms positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..MAX_TERMS {
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

fn erfc_cf(x: f64) -> f64 {
    (-x * x).exp() * erfcx_cf(x)
}

// Laplace continued fraction
//   √π e^{x²} erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + …)))))
// evaluated with the modified Lentz method.
fn erfcx_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..MAX_TERMS {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (f * PI.sqrt())
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..MAX_TERMS {
        term *= -x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// e^x E₁(x) = 1/(x+1 − 1²/(x+3 − 2²/(x+5 − …))), modified Lentz.
fn scaled_e1_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
