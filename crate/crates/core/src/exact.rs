//! The sharp-front similarity solution.
//!
//! With `u = x/x_c(t)` the field is `B(x,t) = f(u)` where `f` has a knee at
//! `u = 1`. Behind the knee the material is burned (η_L), ahead of it cold
//! (η_S), and on each side
//!
//! ```text
//! f'(u) = A · exp(−h u² / (2η))
//! ```
//!
//! with `h = μ₀·v_c·x_c` constant in time. Two relations between the knee
//! field `B_c` and `h` follow: one from flux continuity at the knee plus the
//! boundary values, one from requiring that the Ohmic energy collected ahead
//! of the front equals `e_c` exactly when the front arrives. Their
//! intersection fixes both constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::params::ProblemParams;
use crate::quadrature::{
    adaptive_integrate, exp_integral, gaussian_head, gaussian_tail, QuadratureSpec,
};

/// Points in the `h` scan used to bracket the intersection.
pub const SCAN_POINTS: usize = 200;
/// Relative width at which bisection stops.
pub const BISECTION_REL_TOL: f64 = 1e-12;
/// Profile is extended until `f < TAIL_FRACTION·B₀`.
pub const TAIL_FRACTION: f64 = 1e-12;
/// Minimum node count of a [`SimilarityProfile`].
pub const MIN_PROFILE_POINTS: usize = 16;
/// Node count used when a profile is built implicitly.
pub const DEFAULT_PROFILE_POINTS: usize = 4001;

/// Time-independent quantities of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolvedConstants {
    /// Field at the knee.
    #[serde(rename = "Bc")]
    pub knee_field: f64,
    /// `μ₀·v_c·x_c`.
    #[serde(rename = "h")]
    pub front_constant: f64,
    /// Amplitude of f' behind the front.
    #[serde(rename = "AL")]
    pub amp_burned: f64,
    /// Amplitude of f' ahead of the front.
    #[serde(rename = "AS")]
    pub amp_cold: f64,
    /// `B₀/√(2μ₀e_c)`.
    #[serde(rename = "b")]
    pub field_ratio: f64,
    /// `η_L/η_S`.
    #[serde(rename = "r")]
    pub resistivity_ratio: f64,
    /// `h/η_L`.
    #[serde(rename = "Hcal")]
    pub reduced_front_constant: f64,
    /// `B_c/B₀`.
    #[serde(rename = "Bcal")]
    pub reduced_knee_field: f64,

    #[serde(skip)]
    b0: f64,
    /// `h/(2η_L)`
    #[serde(skip)]
    arg_burned: f64,
    /// `h/(2η_S)`
    #[serde(skip)]
    arg_cold: f64,
    #[serde(skip)]
    head_burned: f64,
    #[serde(skip)]
    tail_cold: f64,
    #[serde(skip)]
    quadrature: QuadratureSpec,
}

/// One sample of the two knee-field relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub h: f64,
    /// Knee field implied by flux continuity.
    #[serde(rename = "Bc1")]
    pub from_flux: f64,
    /// Knee field implied by the energy condition.
    #[serde(rename = "Bc2")]
    pub from_energy: f64,
}

impl CurvePoint {
    pub fn mismatch(&self) -> f64 {
        self.from_flux - self.from_energy
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("h must be finite and > 0, got {h}")))
    }
}

/// Knee field as a function of `h` from flux continuity and the boundary
/// values: `B₀ / (1 + (η_S/η_L)·head(h/2η_L)/tail(h/2η_S))`.
pub fn knee_field_from_flux(h: f64, p: &ProblemParams, q: &QuadratureSpec) -> Result<f64> {
    check_h(h)?;
    let head = gaussian_head(0.5 * h / p.eta_burned, q)?;
    let tail = gaussian_tail(0.5 * h / p.eta_cold, q)?;
    Ok(p.b0 / (1.0 + p.eta_cold / p.eta_burned * head / tail))
}

/// Knee field as a function of `h` from the front-arrival energy condition:
/// `√(2μ₀e_c) · √((h/η_S)·tail²(h/2η_S)/expint(h/η_S))`.
pub fn knee_field_from_energy(h: f64, p: &ProblemParams, q: &QuadratureSpec) -> Result<f64> {
    check_h(h)?;
    let tail = gaussian_tail(0.5 * h / p.eta_cold, q)?;
    let expint = exp_integral(h / p.eta_cold, q)?;
    Ok((2.0 * p.mu0 * p.e_crit).sqrt() * (h / p.eta_cold * tail * tail / expint).sqrt())
}

/// The scan range `[10⁻⁶·η_S, 10³·η_L]`.
pub fn scan_range(p: &ProblemParams) -> (f64, f64) {
    (1e-6 * p.eta_cold, 1e3 * p.eta_burned)
}

/// Both knee-field relations on a log grid over [`scan_range`].
pub fn knee_curves(p: &ProblemParams, q: &QuadratureSpec, points: usize) -> Result<Vec<CurvePoint>> {
    p.validate()?;
    if points < 2 {
        return Err(Error::invalid("curve needs at least 2 points"));
    }
    let (lo, hi) = scan_range(p);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            let h = if i == points - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp()
            };
            Ok(CurvePoint {
                h,
                from_flux: knee_field_from_flux(h, p, q)?,
                from_energy: knee_field_from_energy(h, p, q)?,
            })
        })
        .collect()
}

fn sign_change_brackets(curve: &[CurvePoint]) -> Vec<(f64, f64)> {
    let mut brackets = Vec::new();
    for (i, pt) in curve.iter().enumerate() {
        if pt.mismatch() == 0.0 {
            brackets.push((pt.h, pt.h));
        } else if let Some(next) = curve.get(i + 1) {
            if next.mismatch() != 0.0 && pt.mismatch().signum() != next.mismatch().signum() {
                brackets.push((pt.h, next.h));
            }
        }
    }
    brackets
}

/// Solve for `(B_c, h)`, also returning the scan used for bracketing.
pub fn solve_constants_traced(
    p: &ProblemParams,
    q: &QuadratureSpec,
) -> Result<(SolvedConstants, Vec<CurvePoint>)> {
    p.validate()?;
    q.validate()?;
    if !p.e_crit.is_finite() {
        return Err(Error::invalid("ec = inf has no sharp-front solution"));
    }
    let curve = knee_curves(p, q, SCAN_POINTS)?;
    let brackets = sign_change_brackets(&curve);
    let (mut lo, mut hi) = match brackets.as_slice() {
        [] => {
            let (lo, hi) = scan_range(p);
            return Err(Error::NoRoot { lo, hi });
        }
        [one] => *one,
        _ => return Err(Error::AmbiguousRoot { brackets }),
    };

    let mismatch = |h: f64| -> Result<f64> {
        Ok(knee_field_from_flux(h, p, q)? - knee_field_from_energy(h, p, q)?)
    };
    if lo < hi {
        let mut g_lo = mismatch(lo)?;
        while hi - lo > BISECTION_REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            let g_mid = mismatch(mid)?;
            if g_mid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if g_mid.signum() == g_lo.signum() {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
            }
        }
    }
    let h = 0.5 * (lo + hi);
    let bc = knee_field_from_flux(h, p, q)?;
    Ok((SolvedConstants::from_knee(p, bc, h, q)?, curve))
}

pub fn solve_constants(p: &ProblemParams, q: &QuadratureSpec) -> Result<SolvedConstants> {
    solve_constants_traced(p, q).map(|(c, _)| c)
}

impl SolvedConstants {
    /// Assemble the derived constants for a given knee field and `h`.
    ///
    /// Also used to build deliberately wrong solutions for negative controls.
    pub fn from_knee(p: &ProblemParams, knee_field: f64, h: f64, q: &QuadratureSpec) -> Result<Self> {
        p.validate()?;
        check_h(h)?;
        if !(knee_field > 0.0 && knee_field.is_finite()) {
            return Err(Error::invalid(format!("knee field must be > 0, got {knee_field}")));
        }
        let arg_burned = 0.5 * h / p.eta_burned;
        let arg_cold = 0.5 * h / p.eta_cold;
        let head_burned = gaussian_head(arg_burned, q)?;
        let tail_cold = gaussian_tail(arg_cold, q)?;
        Ok(Self {
            knee_field,
            front_constant: h,
            amp_burned: (knee_field - p.b0) * arg_burned.exp() / head_burned,
            amp_cold: -knee_field * arg_cold.exp() / tail_cold,
            field_ratio: p.field_ratio(),
            resistivity_ratio: p.resistivity_ratio(),
            reduced_front_constant: h / p.eta_burned,
            reduced_knee_field: knee_field / p.b0,
            b0: p.b0,
            arg_burned,
            arg_cold,
            head_burned,
            tail_cold,
            quadrature: *q,
        })
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    /// f' behind the front, evaluated for any `u` (the burned branch).
    pub fn slope_burned(&self, u: f64) -> f64 {
        (self.knee_field - self.b0) / self.head_burned * (self.arg_burned * (1.0 - u * u)).exp()
    }

    /// f' ahead of the front, evaluated for any `u` (the cold branch).
    pub fn slope_cold(&self, u: f64) -> f64 {
        -self.knee_field / self.tail_cold * (self.arg_cold * (1.0 - u * u)).exp()
    }

    /// f'(u); the cold branch is used from `u = 1` on.
    pub fn profile_slope(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::invalid(format!("u must be >= 0, got {u}")));
        }
        Ok(if u < 1.0 {
            self.slope_burned(u)
        } else {
            self.slope_cold(u)
        })
    }

    /// Energy density collected ahead of the front by the time it arrives,
    /// evaluated from `(A_S, h)`; equals `e_c` for a consistent solution.
    pub fn energy_closure(&self, p: &ProblemParams) -> Result<f64> {
        let h = self.front_constant;
        let expint = exp_integral(h / p.eta_cold, &self.quadrature)?;
        Ok(p.eta_cold * self.knee_field.powi(2) * expint
            / (2.0 * p.mu0 * h * self.tail_cold * self.tail_cold))
    }

    /// Smallest `u` beyond which the cold-side Gaussian bound puts `f` below
    /// `TAIL_FRACTION·B₀`, capped at `1 + √(80/arg_cold)`.
    fn tail_extent(&self) -> f64 {
        let a = self.arg_cold;
        let target = TAIL_FRACTION * self.b0;
        let bound = |u: f64| {
            self.knee_field * (a * (1.0 - u * u)).exp() / (2.0 * a * u * self.tail_cold)
        };
        let cap = 1.0 + (80.0 / a).sqrt();
        if bound(cap) > target {
            return cap;
        }
        let (mut lo, mut hi) = (1.0, cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bound(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * hi {
                break;
            }
        }
        hi
    }
}

/// `x_c(t) = √(2ht/μ₀)`.
pub fn front_position(t: f64, c: &SolvedConstants, p: &ProblemParams) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be >= 0, got {t}")));
    }
    Ok((2.0 * c.front_constant / p.mu0 * t).sqrt())
}

/// `v_c(t) = h/(μ₀·x_c(t))`; singular at `t = 0`.
pub fn front_velocity(t: f64, c: &SolvedConstants, p: &ProblemParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("front velocity needs t > 0, got {t}")));
    }
    Ok(c.front_constant / (p.mu0 * front_position(t, c, p)?))
}

/// `f` and `f'` sampled on a `u`-grid that contains the knee exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityProfile {
    pub u: Vec<f64>,
    pub f: Vec<f64>,
    /// `f'(u)`, cold branch at the knee node.
    pub fprime: Vec<f64>,
    /// Burned-side limit `f'(1⁻)`.
    pub knee_slope_burned: f64,
    pub knee_index: usize,
}

impl SimilarityProfile {
    pub fn u_max(&self) -> f64 {
        *self.u.last().expect("profile is non-empty")
    }

    pub fn interpolant(&self) -> MonotoneCubic {
        let slopes = (0..self.u.len() - 1)
            .map(|i| {
                let right = if i + 1 == self.knee_index {
                    self.knee_slope_burned
                } else {
                    self.fprime[i + 1]
                };
                (self.fprime[i], right)
            })
            .collect();
        MonotoneCubic::with_segment_slopes(self.u.clone(), self.f.clone(), slopes)
            .expect("profile grid is strictly increasing")
    }
}

/// Integrate f' cumulatively: forward from `f(0) = B₀` across the burned
/// side, backward from the far tail across the cold side (so small tail
/// values keep their relative accuracy).
pub fn build_profile(c: &SolvedConstants, p: &ProblemParams, n_points: usize) -> Result<SimilarityProfile> {
    if n_points < MIN_PROFILE_POINTS {
        return Err(Error::invalid(format!(
            "profile needs at least {MIN_PROFILE_POINTS} points, got {n_points}"
        )));
    }
    let q = c.quadrature;
    let u_max = c.tail_extent();
    let intervals = n_points - 1;
    let n_burned = ((intervals as f64 / u_max).round() as usize).clamp(4, intervals - 4);
    let n_cold = intervals - n_burned;

    let mut u: Vec<f64> = (0..n_burned)
        .map(|i| i as f64 / n_burned as f64)
        .collect();
    let knee_index = u.len();
    u.extend((0..=n_cold).map(|i| {
        if i == n_cold {
            u_max
        } else {
            1.0 + (u_max - 1.0) * i as f64 / n_cold as f64
        }
    }));

    let mut f = vec![0.0; u.len()];
    f[0] = p.b0;
    for i in 0..knee_index {
        let seg = adaptive_integrate(|s| c.slope_burned(s), u[i], u[i + 1], &q)?;
        f[i + 1] = f[i] + seg;
    }
    let knee_forward = f[knee_index];

    // ∫_{u_max}^∞ |f'| through s = 1/t on (0, 1/u_max].
    let last = u.len() - 1;
    f[last] = adaptive_integrate(
        |t| {
            if t <= 0.0 {
                0.0
            } else {
                -c.slope_cold(1.0 / t) / (t * t)
            }
        },
        0.0,
        1.0 / u_max,
        &q,
    )?;
    for i in (knee_index..last).rev() {
        let seg = adaptive_integrate(|s| -c.slope_cold(s), u[i], u[i + 1], &q)?;
        f[i] = f[i + 1] + seg;
    }
    // Both sweeps land on B_c; keep the value reached from the boundary.
    f[knee_index] = knee_forward;

    let fprime = u
        .iter()
        .map(|&s| c.profile_slope(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimilarityProfile {
        u,
        f,
        fprime,
        knee_slope_burned: c.slope_burned(1.0),
        knee_index,
    })
}

/// Field samples `(x, B, e)` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub e: Vec<f64>,
    /// Front position, when one is defined.
    pub xc: Option<f64>,
}

/// Constants, profile and interpolant bundled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub params: ProblemParams,
    pub constants: SolvedConstants,
    pub profile: SimilarityProfile,
    interp: MonotoneCubic,
}

impl ExactSolution {
    pub fn solve(p: &ProblemParams, q: &QuadratureSpec) -> Result<Self> {
        let c = solve_constants(p, q)?;
        Self::from_constants(p, c, DEFAULT_PROFILE_POINTS)
    }

    pub fn from_constants(p: &ProblemParams, c: SolvedConstants, n_points: usize) -> Result<Self> {
        let profile = build_profile(&c, p, n_points)?;
        let interp = profile.interpolant();
        Ok(Self {
            params: *p,
            constants: c,
            profile,
            interp,
        })
    }

    pub fn front_position(&self, t: f64) -> Result<f64> {
        front_position(t, &self.constants, &self.params)
    }

    pub fn front_velocity(&self, t: f64) -> Result<f64> {
        front_velocity(t, &self.constants, &self.params)
    }

    /// `f(u)` from the monotone interpolant; beyond the sampled tail the
    /// last (negligible) value is returned.
    pub fn similarity_field(&self, u: f64) -> f64 {
        self.interp.eval(u)
    }

    /// `B(x,t) = f(x/x_c(t))`.
    pub fn field_at(&self, x: f64, t: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::invalid(format!("x must be >= 0, got {x}")));
        }
        if !(t > 0.0) {
            return Err(Error::invalid(format!("t must be > 0, got {t}")));
        }
        Ok(self.similarity_field(x / self.front_position(t)?))
    }

    /// Energy density at `u = x/x_c(t)`, by integrating the Ohmic heating
    /// rate along a fixed material point.
    ///
    /// Time is traded for the front position `s = x_c(t')`, with
    /// `dt' = μ₀ s ds / h`, and then for `w = x/s`:
    ///
    /// ```text
    /// e = ∫_U^∞ η(w) f'(w)² / (μ₀ h w) dw,     U = x/x_c(t)
    /// ```
    ///
    /// While the front is still ahead (`w > 1`) the point is cold and the
    /// accumulated energy reaches exactly `e_c` as the front arrives; from
    /// then on `η = η_L`. The cold part is mapped to a finite interval with
    /// `w = 1/τ`.
    pub fn energy_at_scaled(&self, scaled: f64) -> Result<f64> {
        if !(scaled > 0.0) {
            return Err(Error::invalid(format!("energy needs x > 0 (u = {scaled})")));
        }
        let c = &self.constants;
        let p = &self.params;
        let q = &c.quadrature;
        let scale = 1.0 / (p.mu0 * c.front_constant);
        let start_cold = scaled.max(1.0);
        let cold = adaptive_integrate(
            |tau| {
                if tau <= 0.0 {
                    return 0.0;
                }
                let s = c.slope_cold(1.0 / tau);
                p.eta_cold * s * s / tau
            },
            0.0,
            1.0 / start_cold,
            q,
        )?;
        let burned = if scaled < 1.0 {
            adaptive_integrate(
                |w| {
                    let s = c.slope_burned(w);
                    p.eta_burned * s * s / w
                },
                scaled,
                1.0,
                q,
            )?
        } else {
            0.0
        };
        Ok(scale * (cold + burned))
    }

    pub fn energy_at(&self, x: f64, t: f64) -> Result<f64> {
        if !(x > 0.0 && t > 0.0) {
            return Err(Error::invalid(format!("energy needs x > 0 and t > 0, got x={x}, t={t}")));
        }
        self.energy_at_scaled(x / self.front_position(t)?)
    }

    /// Sample B and e at the given positions. `e` at `x = 0` is infinite.
    pub fn field_profile(&self, t: f64, x: &[f64]) -> Result<FieldProfile> {
        let b = x
            .iter()
            .map(|&xi| self.field_at(xi, t))
            .collect::<Result<Vec<_>>>()?;
        let e = x
            .iter()
            .map(|&xi| {
                if xi == 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    self.energy_at(xi, t)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldProfile {
            t,
            x: x.to_vec(),
            b,
            e,
            xc: Some(self.front_position(t)?),
        })
    }
}

/// `(ℋ, ℬ) = (h/η_L, B_c/B₀)` for given `b = B₀/√(2μ₀e_c)` and `r = η_L/η_S`,
/// solved in the normalisation `η_L = μ₀ = e_c = 1`, `B₀ = b√2`.
pub fn dimensionless_solve(b: f64, r: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("b must be > 0, got {b}")));
    }
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::invalid(format!("r must be > 1, got {r}")));
    }
    let p = ProblemParams {
        b0: b * 2f64.sqrt(),
        e_crit: 1.0,
        eta_burned: 1.0,
        eta_cold: 1.0 / r,
        mu0: 1.0,
    };
    let c = solve_constants(&p, q)?;
    Ok((c.reduced_front_constant, c.reduced_knee_field))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub b: f64,
    pub r: f64,
    #[serde(rename = "Hcal")]
    pub h_cal: Option<f64>,
    #[serde(rename = "Bcal")]
    pub b_cal: Option<f64>,
    pub failure: Option<String>,
}

/// `(ℋ, ℬ)` over the b × r grid, b-major. Cells are solved in parallel;
/// failures are kept as rows.
pub fn scan_table(b_values: &[f64], r_values: &[f64], q: &QuadratureSpec) -> Vec<ScanRow> {
    let cells: Vec<(f64, f64)> = b_values
        .iter()
        .flat_map(|&b| r_values.iter().map(move |&r| (b, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(b, r)| match dimensionless_solve(b, r, q) {
            Ok((h, bc)) => ScanRow {
                b,
                r,
                h_cal: Some(h),
                b_cal: Some(bc),
                failure: None,
            },
            Err(e) => ScanRow {
                b,
                r,
                h_cal: None,
                b_cal: None,
                failure: Some(e.to_string()),
            },
        })
        .collect()
}
