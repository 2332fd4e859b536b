//! End-to-end runs of the `magdiff` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use magdiff::cli::{parse_csv, profile_table, RunConfig};
use tempfile::TempDir;

const REFERENCE: &str = r#"{"B0": 0.2, "ec": 0.1, "etaL": 9.7e-3, "etaS": 9.7e-5}"#;

fn magdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magdiff")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_reports_reference_constants() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let out = magdiff(&["solve", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let bc = doc["constants"]["Bc"].as_f64().unwrap();
    let h = doc["constants"]["h"].as_f64().unwrap();
    assert!((bc - 0.1558).abs() < 5e-4, "Bc {bc}");
    assert!(((h - 2.441e-3) / 2.441e-3).abs() < 5e-3, "h {h}");
    assert!(doc["curve"].as_array().is_some_and(|c| !c.is_empty()));
}

#[test]
fn solve_csv_writes_curve_to_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let target = dir.path().join("curve.csv");
    let out = magdiff(&["solve", "--config", arg(&cfg), "--format", "csv", "--points", "20", "--out", arg(&target)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,Bc1,Bc2"));
    assert_eq!(lines.count(), 20);
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", r#"{"B0": 0.2, "ec": 0.1, "etaL": 9.7e-3}"#);
    let out = magdiff(&["solve", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("etaS"));
}

#[test]
fn inverted_resistivities_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", r#"{"B0": 0.2, "ec": 0.1, "etaL": 1e-5, "etaS": 9.7e-5}"#);
    assert_eq!(magdiff(&["solve", "--config", arg(&cfg)]).status.code(), Some(2));
}

#[test]
fn unreadable_config_fails_cleanly() {
    let out = magdiff(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.json"));
}

#[test]
fn profile_round_trips_through_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let out = magdiff(&["profile", "--config", arg(&cfg), "--t", "0.4", "--points", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&out)).unwrap();
    assert_eq!(header, ["u", "f", "x", "B", "e"]);

    let first = &rows[0];
    assert_eq!((first[0], first[1], first[2]), (0.0, 0.2, 0.0));
    assert!(first[4].is_infinite());
    let knee = rows.iter().find(|r| r[0] == 1.0).expect("knee row");
    assert!((knee[3] - 0.155767).abs() < 1e-5);
    assert!((knee[4] - 0.1).abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[1][1] <= w[0][1]));

    let table = profile_table(&RunConfig::from_json(REFERENCE).unwrap(), 0.4, 64).unwrap();
    assert_eq!(rows.len(), table.u.len());
    for (row, k) in rows.iter().zip(0..) {
        for (got, want) in row[..4].iter().zip([table.u[k], table.f[k], table.x[k], table.b[k]]) {
            assert!((got - want).abs() <= 1e-11 * want.abs(), "{got} vs {want}");
        }
    }
}

#[test]
fn simulate_at_zero_time_is_quiescent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let out_dir = dir.path().join("snaps");
    let out = magdiff(&["simulate", "--config", arg(&cfg), "--out", arg(&out_dir), "--t", "0", "--cells", "16"]);
    assert_eq!(out.status.code(), Some(0));
    let written: Vec<_> = std::fs::read_dir(&out_dir).unwrap().collect();
    assert_eq!(written.len(), 1);
    let (header, rows) = parse_csv(&std::fs::read_to_string(written[0].as_ref().unwrap().path()).unwrap()).unwrap();
    assert_eq!(header, ["x", "B", "e"]);
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn simulate_writes_one_file_per_mesh_and_time() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let out_dir = dir.path().join("snaps");
    let out = magdiff(&["simulate", "--config", arg(&cfg), "--out", arg(&out_dir), "--t", "0.01,0.02", "--cells", "50,100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(&out_dir).unwrap().count(), 4);
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn scan_reproduces_reference_cell() {
    let out = magdiff(&["scan", "--b", "1.26157", "--r", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("b,r,Hcal,Bcal,status"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[4], "ok");
    let hcal: f64 = row[2].parse().unwrap();
    let bcal: f64 = row[3].parse().unwrap();
    assert!((hcal - 0.2516).abs() < 1e-3, "{hcal}");
    assert!((bcal - 0.779).abs() < 1e-3, "{bcal}");
}

#[test]
fn scan_reports_bad_cells_inline() {
    let out = magdiff(&["scan", "--b", "1.26157", "--r", "100,0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().ends_with(",ok"));
    assert!(text.lines().nth(2).unwrap().contains("failed"));
}

#[test]
fn compare_on_short_domain_exits_four() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.json", r#"{"B0": 0.2, "ec": 0.1, "etaL": 9.7e-3, "etaS": 9.7e-5, "xmax": 0.05}"#);
    let out = magdiff(&["compare", "--config", arg(&cfg), "--cells", "20,40"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn compare_short_run_writes_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let target = dir.path().join("report.json");
    let out = magdiff(&["compare", "--config", arg(&cfg), "--t", "0.05", "--cells", "100,200,400", "--out", arg(&target)]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    assert_eq!(report["orders"].as_array().unwrap().len(), 2);
    let code = out.status.code();
    match report["verdict"].as_str() {
        Some("pass") => assert_eq!(code, Some(0)),
        Some("fail") => assert_eq!(code, Some(5)),
        other => panic!("verdict {other:?}"),
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(magdiff(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn compare_reference_config_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ref.json", REFERENCE);
    let out = magdiff(&["compare", "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["verdict"], "pass");
    let n: Vec<u64> = report["entries"].as_array().unwrap().iter().map(|e| e["N"].as_u64().unwrap()).collect();
    assert_eq!(n, [200, 400, 800, 1600]);
}
