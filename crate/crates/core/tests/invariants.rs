//! Mesh-level properties of the simulator and the comparison harness.

use std::sync::OnceLock;

use magdiff::cli::to_json;
use magdiff::simulator::{extract_front, run};
use magdiff::special::erfc;
use magdiff::verify::{
    assemble_report, build_report, exact_from_constants, norms, simulate_meshes, CompareOptions, Order, SimRun,
    Verdict,
};
use magdiff::{ExactSolution, Mesh1D, ProblemParams, QuadratureSpec, SimConfig, SolvedConstants};

const T: f64 = 0.4;

/// Reference problem on N = 200..1600 at t = 0.4, shared by the tests below.
fn flagship() -> &'static (ExactSolution, Vec<SimRun>) {
    static RUNS: OnceLock<(ExactSolution, Vec<SimRun>)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let p = ProblemParams::reference();
        let exact = ExactSolution::solve(&p, &QuadratureSpec::default()).unwrap();
        let runs = simulate_meshes(&p, T, &[200, 400, 800, 1600], &CompareOptions::default()).unwrap();
        (exact, runs)
    })
}

fn perturbed(exact: &ExactSolution, knee_scale: f64, front_scale: f64) -> ExactSolution {
    let c = exact.constants;
    let p = exact.params;
    let wrong = SolvedConstants::from_knee(
        &p,
        knee_scale * c.knee_field,
        front_scale * c.front_constant,
        &QuadratureSpec::default(),
    )
    .unwrap();
    exact_from_constants(&p, wrong).unwrap()
}

#[test]
fn flagship_passes_with_positive_orders() {
    let (exact, runs) = flagship();
    let report = assemble_report(exact, T, runs).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{:?}", report.reasons);
    for o in &report.orders {
        for order in [o.l1, o.l2, o.linf] {
            assert!(matches!(order, Order::Rate(r) if r > 0.0), "{o:?}");
        }
    }
}

#[test]
fn finest_linf_sits_at_the_knee() {
    let (exact, runs) = flagship();
    let sim = runs.last().unwrap().outcome.as_ref().unwrap();
    let (argmax, _) = sim
        .x
        .iter()
        .zip(&sim.b)
        .map(|(&x, &b)| (x, (b - exact.field_at(x, T).unwrap()).abs()))
        .fold((0.0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let front = extract_front(sim, &exact.params).unwrap();
    let dx = sim.x[1] - sim.x[0];
    assert!((argmax - front).abs() <= 3.0 * dx, "argmax {argmax}, front {front}");
}

#[test]
fn inflated_front_constant_fails_the_verdict() {
    let (exact, runs) = flagship();
    let report = assemble_report(&perturbed(exact, 1.0, 1.5), T, runs).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
}

#[test]
fn linear_diffusion_error_shrinks_with_every_refinement() {
    let p = ProblemParams {
        e_crit: f64::INFINITY,
        ..ProblemParams::reference()
    };
    let length = (4.0 * p.eta_cold / p.mu0 * 0.4).sqrt();
    let errors: Vec<f64> = [200, 400, 800, 1600]
        .iter()
        .map(|&n| {
            let mesh = Mesh1D::new(n, 0.5).unwrap();
            let snap = run(&mesh, &p, &SimConfig::at_times(vec![0.4])).unwrap().remove(0);
            norms(&snap, |x| Ok(p.b0 * erfc(x / length))).unwrap().linf
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn comparison_report_is_reproducible() {
    let p = ProblemParams::reference();
    let q = QuadratureSpec::default();
    let opts = CompareOptions::default();
    let strip_runtime = |mut v: serde_json::Value| {
        for e in v["entries"].as_array_mut().unwrap() {
            e.as_object_mut().unwrap().remove("runtime_s");
        }
        v
    };
    let first = build_report(&p, 0.1, &[100, 200, 400], &q, &opts).unwrap();
    let second = build_report(&p, 0.1, &[100, 200, 400], &q, &opts).unwrap();
    assert_eq!(first.verdict, second.verdict);
    let a: serde_json::Value = serde_json::from_str(&to_json(&first).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&to_json(&second).unwrap()).unwrap();
    assert_eq!(strip_runtime(a), strip_runtime(b));
}

/// A knee field raised by 5% (front constant held) must triple the
/// finest-mesh L∞ error.
#[test]
fn knee_field_perturbation_triples_finest_linf() {
    let (exact, runs) = flagship();
    let base = assemble_report(exact, T, runs).unwrap();
    let off = assemble_report(&perturbed(exact, 1.05, 1.0), T, runs).unwrap();
    let (b, o) = (base.entries.last().unwrap(), off.entries.last().unwrap());
    let ratio = |x: Option<f64>, y: Option<f64>| y.unwrap() / x.unwrap();
    assert!(
        ratio(b.linf, o.linf) >= 3.0,
        "Linf ×{:.2} (L1 ×{:.2}, L2 ×{:.2}): {:.3e} -> {:.3e}",
        ratio(b.linf, o.linf),
        ratio(b.l1, o.l1),
        ratio(b.l2, o.l2),
        b.linf.unwrap(),
        o.linf.unwrap(),
    );
}
