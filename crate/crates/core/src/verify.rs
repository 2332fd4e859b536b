//! Simulated-versus-exact comparison: error norms at the cell centres,
//! front-position error, convergence orders and the pass/fail verdict.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{ExactSolution, FieldProfile, SolvedConstants, DEFAULT_PROFILE_POINTS};
use crate::params::ProblemParams;
use crate::quadrature::QuadratureSpec;
use crate::simulator::{extract_front, run, Mesh1D, SimConfig};

/// The verdict requires the finest front error below this many cells.
pub const FRONT_TOLERANCE_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
}

impl Norms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.linf]
    }
}

/// Widths of the cells around each sample: edges halfway between samples,
/// the outer edges mirrored.
fn cell_widths(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { x[1] - x[0] } else { x[i] - x[i - 1] };
            let right = if i + 1 == n { x[n - 1] - x[n - 2] } else { x[i + 1] - x[i] };
            0.5 * (left + right)
        })
        .collect()
}

/// Norms of `B_sim − exact(x)` over the simulated samples. L1 and L2 are
/// weighted by cell width.
pub fn norms<F>(sim: &FieldProfile, exact: F) -> Result<Norms>
where
    F: Fn(f64) -> Result<f64>,
{
    if sim.x.len() < 2 || sim.x.len() != sim.b.len() {
        return Err(Error::invalid("norms need >= 2 samples with matching x and B"));
    }
    let widths = cell_widths(&sim.x);
    let mut out = Norms {
        l1: 0.0,
        l2: 0.0,
        linf: 0.0,
    };
    for ((&x, &b), w) in sim.x.iter().zip(&sim.b).zip(widths) {
        let d = (b - exact(x)?).abs();
        out.l1 += w * d;
        out.l2 += w * d * d;
        out.linf = out.linf.max(d);
    }
    out.l2 = out.l2.sqrt();
    Ok(out)
}

/// Observed order between two meshes, or `Saturated` when the finer error
/// is already zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Rate(f64),
    Saturated,
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Order::Rate(v) if v.is_finite() => s.serialize_f64(v),
            Order::Rate(v) => s.serialize_str(if v > 0.0 { "inf" } else { "-inf" }),
            Order::Saturated => s.serialize_str("saturated"),
        }
    }
}

fn order(coarse: f64, fine: f64, refinement: f64) -> Order {
    if fine == 0.0 {
        Order::Saturated
    } else {
        Order::Rate((coarse / fine).ln() / refinement.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderRecord {
    #[serde(rename = "N_coarse")]
    pub coarse: usize,
    #[serde(rename = "N_fine")]
    pub fine: usize,
    #[serde(rename = "L1")]
    pub l1: Order,
    #[serde(rename = "L2")]
    pub l2: Order,
    #[serde(rename = "Linf")]
    pub linf: Order,
}

/// `log(err_coarse/err_fine)/log(N_fine/N_coarse)` for each norm, which is
/// the log₂ ratio when N doubles.
pub fn convergence_orders(entries: &[(usize, Norms)]) -> Result<Vec<OrderRecord>> {
    if entries.len() < 2 {
        return Err(Error::invalid("convergence orders need at least two meshes"));
    }
    if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("mesh sizes must be strictly ascending"));
    }
    Ok(entries
        .windows(2)
        .map(|w| {
            let ((nc, c), (nf, f)) = (w[0], w[1]);
            let refinement = nf as f64 / nc as f64;
            OrderRecord {
                coarse: nc,
                fine: nf,
                l1: order(c.l1, f.l1, refinement),
                l2: order(c.l2, f.l2, refinement),
                linf: order(c.linf, f.linf, refinement),
            }
        })
        .collect())
}

/// Mesh and time-step settings shared by every run of a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub x_max: f64,
    pub cfl: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            x_max: 0.5,
            cfl: SimConfig::default().cfl,
        }
    }
}

/// One simulator run, kept separate from the exact evaluation so the same
/// runs can be scored against different exact solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub n_cells: usize,
    pub dx: f64,
    pub runtime_s: f64,
    pub outcome: Result<FieldProfile>,
}

fn check_mesh_list(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 2 {
        return Err(Error::invalid(format!(
            "a comparison needs at least two meshes, got {n_list:?}"
        )));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("mesh sizes must be strictly ascending, got {n_list:?}")));
    }
    Ok(())
}

/// Run the simulator to `t` on every mesh, concurrently. Per-mesh failures
/// are kept in the returned runs.
pub fn simulate_meshes(p: &ProblemParams, t: f64, n_list: &[usize], opts: &CompareOptions) -> Result<Vec<SimRun>> {
    check_mesh_list(n_list)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let config = SimConfig {
        cfl: opts.cfl,
        ..SimConfig::at_times(vec![t])
    };
    Ok(n_list
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let outcome = Mesh1D::new(n, opts.x_max)
                .and_then(|mesh| run(&mesh, p, &config))
                .map(|mut snaps| snaps.remove(0));
            SimRun {
                n_cells: n,
                dx: opts.x_max / n as f64,
                runtime_s: start.elapsed().as_secs_f64(),
                outcome,
            }
        })
        .collect())
}

fn serialize_error<S: Serializer>(e: &Option<Error>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_str(&e.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    #[serde(rename = "N")]
    pub n_cells: usize,
    #[serde(rename = "L1")]
    pub l1: Option<f64>,
    #[serde(rename = "L2")]
    pub l2: Option<f64>,
    #[serde(rename = "Linf")]
    pub linf: Option<f64>,
    pub front_error: Option<f64>,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_error")]
    pub error: Option<Error>,
    #[serde(skip)]
    pub dx: f64,
}

impl ReportEntry {
    pub fn norms(&self) -> Option<Norms> {
        Some(Norms {
            l1: self.l1?,
            l2: self.l2?,
            linf: self.linf?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub params: ProblemParams,
    pub constants: SolvedConstants,
    pub t: f64,
    pub entries: Vec<ReportEntry>,
    pub orders: Vec<OrderRecord>,
    pub verdict: Verdict,
    /// Why the verdict failed; empty on a pass.
    #[serde(skip)]
    pub reasons: Vec<String>,
}

fn score(exact: &ExactSolution, t: f64, run: &SimRun) -> ReportEntry {
    let mut entry = ReportEntry {
        n_cells: run.n_cells,
        l1: None,
        l2: None,
        linf: None,
        front_error: None,
        runtime_s: run.runtime_s,
        error: None,
        dx: run.dx,
    };
    let profile = match &run.outcome {
        Ok(profile) => profile,
        Err(e) => {
            entry.error = Some(e.clone());
            return entry;
        }
    };
    match norms(profile, |x| exact.field_at(x, t)) {
        Ok(n) => {
            entry.l1 = Some(n.l1);
            entry.l2 = Some(n.l2);
            entry.linf = Some(n.linf);
        }
        Err(e) => entry.error = Some(e),
    }
    let front = extract_front(profile, &exact.params)
        .and_then(|sim| Ok((sim - exact.front_position(t)?).abs()));
    match front {
        Ok(d) => entry.front_error = Some(d),
        Err(e) => {
            entry.error.get_or_insert(e);
        }
    }
    entry
}

fn judge(entries: &[ReportEntry]) -> Vec<String> {
    let mut reasons = Vec::new();
    for e in entries {
        if let Some(err) = &e.error {
            reasons.push(format!("N={}: {err}", e.n_cells));
        }
    }
    let scored: Vec<(usize, Norms)> = entries
        .iter()
        .filter_map(|e| Some((e.n_cells, e.norms()?)))
        .collect();
    for w in scored.windows(2) {
        let names = ["L1", "L2", "Linf"];
        for ((name, c), f) in names.iter().zip(w[0].1.as_array()).zip(w[1].1.as_array()) {
            if !(f < c) {
                reasons.push(format!("{name} does not decrease from N={} to N={}", w[0].0, w[1].0));
            }
        }
    }
    if let Some(last) = entries.last() {
        let limit = FRONT_TOLERANCE_CELLS * last.dx;
        match last.front_error {
            Some(d) if d < limit => {}
            Some(d) => reasons.push(format!("front error {d:e} at N={} is not below {limit:e}", last.n_cells)),
            None => reasons.push(format!("no front error at N={}", last.n_cells)),
        }
    }
    reasons
}

/// Score existing runs against an exact solution. The runs must come from
/// [`simulate_meshes`] at the same `t`.
pub fn assemble_report(exact: &ExactSolution, t: f64, runs: &[SimRun]) -> Result<ComparisonReport> {
    check_mesh_list(&runs.iter().map(|r| r.n_cells).collect::<Vec<_>>())?;
    let entries: Vec<ReportEntry> = runs.iter().map(|r| score(exact, t, r)).collect();
    let scored: Vec<(usize, Norms)> = entries
        .iter()
        .filter_map(|e| Some((e.n_cells, e.norms()?)))
        .collect();
    let orders = if scored.len() >= 2 {
        convergence_orders(&scored)?
    } else {
        Vec::new()
    };
    let reasons = judge(&entries);
    Ok(ComparisonReport {
        params: exact.params,
        constants: exact.constants,
        t,
        entries,
        orders,
        verdict: if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail },
        reasons,
    })
}

/// Solve the constants once, simulate every mesh and score the runs.
pub fn build_report(
    p: &ProblemParams,
    t: f64,
    n_list: &[usize],
    q: &QuadratureSpec,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    check_mesh_list(n_list)?;
    let exact = ExactSolution::solve(p, q)?;
    let runs = simulate_meshes(p, t, n_list, opts)?;
    assemble_report(&exact, t, &runs)
}

/// Exact solution built from given (possibly deliberately wrong) constants.
pub fn exact_from_constants(p: &ProblemParams, c: SolvedConstants) -> Result<ExactSolution> {
    ExactSolution::from_constants(p, c, DEFAULT_PROFILE_POINTS)
}
