//! Explicit conservative finite-volume solver for
//!
//! ```text
//! ∂B/∂t = ∂x(η(e)/μ₀ ∂x B)
//! ∂e/∂t = η(e) (∂x B / μ₀)²
//! ```
//!
//! on a uniform cell-centred mesh over `[0, x_max]`. The field is held at
//! `B₀` on the face `x = 0` and at `0` on the face `x = x_max`. Face
//! resistivities are harmonic means of the neighbouring cells, with a
//! sub-cell front position on the face that separates burned from cold.
//! Each step updates B, then heats e with the new cell current, then
//! refreshes η from the step law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{front_position, solve_constants, FieldProfile};
use crate::params::ProblemParams;
use crate::quadrature::QuadratureSpec;

/// Largest admissible safety factor on the explicit diffusion limit.
pub const CFL_MAX: f64 = 0.5;
/// The predicted front must stay left of this fraction of the domain.
pub const FRONT_CLEARANCE: f64 = 0.6;
/// Penetration of a linear-diffusion run, in diffusion lengths `√(4Dt)`,
/// where `erfc` has dropped below 1e-6.
const LINEAR_PENETRATION: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub n_cells: usize,
    pub x_max: f64,
}

impl Mesh1D {
    pub fn new(n_cells: usize, x_max: f64) -> Result<Self> {
        let mesh = Self { n_cells, x_max };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 8 {
            return Err(Error::invalid(format!("need at least 8 cells, got {}", self.n_cells)));
        }
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::invalid(format!("x_max must be > 0, got {}", self.x_max)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_cells).map(|i| (i as f64 + 0.5) * dx).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub output_times: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 0.4,
            cfl: 0.4,
            output_times: vec![0.4],
        }
    }
}

impl SimConfig {
    pub fn at_times(output_times: Vec<f64>) -> Self {
        let t_end = output_times.iter().cloned().fold(0.0, f64::max);
        Self {
            t_end,
            output_times,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= CFL_MAX) {
            return Err(Error::invalid(format!("cfl must be in (0, {CFL_MAX}], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if let Some(bad) = self
            .output_times
            .iter()
            .find(|&&t| !(t >= 0.0 && t <= self.t_end))
        {
            return Err(Error::invalid(format!("output time {bad} outside [0, {}]", self.t_end)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub b: Vec<f64>,
    pub e: Vec<f64>,
    pub eta: Vec<f64>,
    /// Harmonic-mean resistivity on the `n + 1` faces.
    pub eta_faces: Vec<f64>,
    /// Current density `∂x B / μ₀` on the `n + 1` faces, from the field after the last step.
    pub j_faces: Vec<f64>,
    pub steps: u64,
}

/// Zero field and energy, cold resistivity everywhere.
pub fn init_state(mesh: &Mesh1D, p: &ProblemParams) -> SimState {
    let n = mesh.n_cells;
    SimState {
        t: 0.0,
        b: vec![0.0; n],
        e: vec![0.0; n],
        eta: vec![p.eta_cold; n],
        eta_faces: vec![p.eta_cold; n + 1],
        j_faces: vec![0.0; n + 1],
        steps: 0,
    }
}

/// `cfl·μ₀·dx²/(2η_L)`, used for every step.
pub fn stable_dt(mesh: &Mesh1D, p: &ProblemParams, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= CFL_MAX) {
        return Err(Error::invalid(format!("cfl must be in (0, {CFL_MAX}], got {cfl}")));
    }
    let dx = mesh.dx();
    Ok(cfl * p.mu0 * dx * dx / (2.0 * p.eta_burned))
}

/// Field magnitudes below this are set to zero. The far tail otherwise
/// decays into subnormal numbers, which are very slow to compute with.
pub const FLUSH_FIELD: f64 = 1e-100;

/// Steps between full non-finite scans of the state.
const NAN_SCAN_INTERVAL: u64 = 64;

/// Face resistivities from the cell values.
///
/// Away from the front this is the harmonic mean. On a face between a
/// burned and a cold cell the front is placed inside the gap between the two
/// centres by extrapolating `ln e` of the two nearest cold cells to `e_c`,
/// and the face gets the series resistance of the burned and cold pieces.
/// A front exactly halfway reproduces the harmonic mean.
fn refresh_face_resistivity(eta: &[f64], e: &[f64], p: &ProblemParams, eta_faces: &mut [f64]) {
    let n = eta.len();
    eta_faces[0] = eta[0];
    eta_faces[1..].copy_from_slice(eta);
    for k in 1..n {
        let (left, right) = (eta[k - 1], eta[k]);
        if left == right {
            continue;
        }
        let cold_run = if left > right {
            e.get(k + 1).map(|&next| (e[k], next))
        } else {
            k.checked_sub(2).map(|prev| (e[k - 1], e[prev]))
        };
        let cold_share = cold_run.map_or(0.5, |(near, far)| front_offset(near, far, p.e_crit));
        let (hot, cold) = (left.max(right), left.min(right));
        eta_faces[k] = 1.0 / ((1.0 - cold_share) / hot + cold_share / cold);
    }
}

/// Distance, in cells, from the nearest cold centre back to where `e`
/// reaches `e_c`, clamped to `[0, 1]`; `0.5` when the cold samples do not
/// decay.
fn front_offset(near: f64, far: f64, ec: f64) -> f64 {
    cold_side_offset(near, far, ec).unwrap_or(0.5)
}

/// `ln e` extrapolated from two cold samples one cell apart.
fn cold_side_offset(near: f64, far: f64, ec: f64) -> Option<f64> {
    (near > 0.0 && far > 0.0 && near > far && near <= ec)
        .then(|| ((ec / near).ln() / (near / far).ln()).clamp(0.0, 1.0))
}

fn face_currents(b: &[f64], b0: f64, scale: f64, j_faces: &mut [f64]) {
    let n = b.len();
    j_faces[0] = 2.0 * (b[0] - b0) * scale;
    for (j, pair) in j_faces[1..n].iter_mut().zip(b.windows(2)) {
        *j = (pair[1] - pair[0]) * scale;
    }
    j_faces[n] = -2.0 * b[n - 1] * scale;
}

/// Advance `state` by `dt` in place.
///
/// B moves by face-flux differences. Each cell is then heated with the
/// current `(F₋ + F₊)/(2η)` built from its two face fluxes `F = η_face·j`
/// of the updated field; in a uniform region this is the centred
/// difference, and across the front it keeps the current on each side
/// consistent with the continuous flux.
///
/// Mirror ghosts `2B₀ − B₀,cell` on the left and `−B_last` on the right put
/// `B₀` and `0` exactly on the boundary faces.
pub fn step(state: &mut SimState, mesh: &Mesh1D, p: &ProblemParams, dt: f64) -> Result<()> {
    let limit = stable_dt(mesh, p, CFL_MAX)?;
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("dt {dt:e} outside (0, {limit:e}]")));
    }
    let n = mesh.n_cells;
    let dx = mesh.dx();
    let scale = 1.0 / (dx * p.mu0);
    let coef = dt / dx;
    let SimState {
        b,
        e,
        eta,
        eta_faces,
        j_faces,
        ..
    } = state;

    face_currents(b, p.b0, scale, j_faces);
    for ((b_i, eta_f), j_f) in b.iter_mut().zip(eta_faces.windows(2)).zip(j_faces.windows(2)) {
        let next = *b_i + coef * (eta_f[1] * j_f[1] - eta_f[0] * j_f[0]);
        *b_i = if next.abs() < FLUSH_FIELD { 0.0 } else { next };
    }

    face_currents(b, p.b0, scale, j_faces);
    let heat = 0.25 * dt;
    for (((e_i, &eta_i), eta_f), j_f) in e
        .iter_mut()
        .zip(eta.iter())
        .zip(eta_faces.windows(2))
        .zip(j_faces.windows(2))
    {
        let flux = eta_f[0] * j_f[0] + eta_f[1] * j_f[1];
        *e_i += heat * flux * flux / eta_i;
    }
    for (eta_i, &e_i) in eta.iter_mut().zip(e.iter()) {
        *eta_i = p.resistivity(e_i);
    }
    refresh_face_resistivity(eta, e, p, eta_faces);

    state.steps += 1;
    state.t += dt;
    if state.steps % NAN_SCAN_INTERVAL == 1 || !(state.b[n / 2] + state.e[n / 2]).is_finite() {
        let finite = state.b.iter().chain(&state.e).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NumericalFailure { step: state.steps });
        }
    }
    Ok(())
}

/// Where the field has effectively arrived by time `t`: the exact front
/// for a finite `e_c`, or a few diffusion lengths for a linear run.
fn predicted_reach(p: &ProblemParams, t: f64) -> Result<f64> {
    if p.e_crit.is_finite() {
        let c = solve_constants(p, &QuadratureSpec::default())?;
        front_position(t, &c, p)
    } else {
        Ok(LINEAR_PENETRATION * (4.0 * p.eta_cold / p.mu0 * t).sqrt())
    }
}

fn snapshot(state: &SimState, centers: &[f64], p: &ProblemParams, t: f64) -> FieldProfile {
    let mut profile = FieldProfile {
        t,
        x: centers.to_vec(),
        b: state.b.clone(),
        e: state.e.clone(),
        xc: None,
    };
    profile.xc = extract_front(&profile, p).ok();
    profile
}

/// Run to every output time (ascending order) with the fixed step
/// [`stable_dt`]. The step that would pass an output time is shortened to
/// land on it exactly.
pub fn run(mesh: &Mesh1D, p: &ProblemParams, config: &SimConfig) -> Result<Vec<FieldProfile>> {
    mesh.validate()?;
    p.validate()?;
    config.validate()?;
    let reach = predicted_reach(p, config.t_end)?;
    if reach >= FRONT_CLEARANCE * mesh.x_max {
        return Err(Error::DomainTooSmall {
            front: reach,
            required_x_max: reach / FRONT_CLEARANCE,
        });
    }

    let dt = stable_dt(mesh, p, config.cfl)?;
    let centers = mesh.centers();
    let mut times = config.output_times.clone();
    times.sort_by(f64::total_cmp);

    let mut state = init_state(mesh, p);
    // t = anchor + k·dt avoids summing a million rounding errors.
    let mut anchor = 0.0;
    let mut k = 0u64;
    let mut out = Vec::with_capacity(times.len());
    for &t_out in &times {
        let whole = ((t_out - anchor) / dt).floor().max(0.0) as u64;
        while k < whole {
            step(&mut state, mesh, p, dt)?;
            k += 1;
            state.t = anchor + k as f64 * dt;
        }
        let rest = t_out - state.t;
        if rest > 1e-12 * dt {
            step(&mut state, mesh, p, rest)?;
            anchor = t_out;
            k = 0;
        }
        state.t = t_out;
        out.push(snapshot(&state, &centers, p, t_out));
    }
    Ok(out)
}

/// Position where `e` first drops to `e_c`.
///
/// `e` has a kink at the front: nearly flat behind it, steep ahead. The
/// crossing is therefore taken from the cold side, extrapolating `ln e` of
/// the first two cold samples back into the bracketing interval, and falls
/// back to linear interpolation between the bracketing samples when the cold
/// samples do not decay.
pub fn extract_front(profile: &FieldProfile, p: &ProblemParams) -> Result<f64> {
    let ec = p.e_crit;
    let (x, e) = (&profile.x, &profile.e);
    let i = (0..e.len().saturating_sub(1))
        .find(|&i| e[i] > ec && e[i + 1] <= ec)
        .ok_or(Error::FrontNotFound)?;
    let cold = e.get(i + 2).and_then(|&far| cold_side_offset(e[i + 1], far, ec));
    Ok(match cold {
        Some(back) => x[i + 1] - back * (x[i + 1] - x[i]),
        None => {
            let w = (e[i] - ec) / (e[i] - e[i + 1]);
            x[i] + w * (x[i + 1] - x[i])
        }
    })
}
