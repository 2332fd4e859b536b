//! Command-line surface: configuration loading, the five commands, and
//! CSV/JSON emission. This is the only module that touches the filesystem.
//!
//! Numbers are written with 12 significant digits and an explicit exponent
//! (`1.55766912345e-1`, `2.00000000000e+0`). Exit codes: 0 ok, 2 invalid config or arguments,
//! 3 root-finding failure, 4 domain too small, 5 accuracy failure
//! (including a failed comparison verdict), 1 anything else.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Number, Value};

use crate::error::Error;
use crate::exact::{
    knee_curves, scan_table, solve_constants_traced, CurvePoint, ExactSolution, FieldProfile,
    SolvedConstants, DEFAULT_PROFILE_POINTS, SCAN_POINTS,
};
use crate::params::{ProblemParams, MU0_DEFAULT};
use crate::quadrature::QuadratureSpec;
use crate::simulator::{run, Mesh1D, SimConfig};
use crate::verify::{build_report, CompareOptions, ComparisonReport, Verdict};

/// Meshes used by `compare` when neither the flag nor the config sets them.
pub const DEFAULT_CELLS: [usize; 4] = [200, 400, 800, 1600];
pub const DEFAULT_X_MAX: f64 = 0.5;
pub const DEFAULT_T: f64 = 0.4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("comparison verdict failed: {}", .0.join("; "))]
    VerdictFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::InvalidArgument(_) | Error::InvalidConfig(_)) => 2,
            CliError::Core(Error::NoRoot { .. } | Error::AmbiguousRoot { .. }) => 3,
            CliError::Core(Error::DomainTooSmall { .. }) => 4,
            CliError::Core(Error::AccuracyFailure(_)) | CliError::VerdictFailed(_) => 5,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// `ec` may be a number or the string `"inf"` (linear diffusion).
fn number_or_inf<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match Value::deserialize(d)? {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| serde::de::Error::custom(format!("{n} is not representable as f64"))),
        Value::String(s) if matches!(s.as_str(), "inf" | "+inf" | "Infinity") => Ok(f64::INFINITY),
        other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {other}"))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "B0")]
    b0: f64,
    #[serde(deserialize_with = "number_or_inf")]
    ec: f64,
    #[serde(rename = "etaL")]
    eta_l: f64,
    #[serde(rename = "etaS")]
    eta_s: f64,
    mu0: Option<f64>,
    xmax: Option<f64>,
    cells: Option<Vec<usize>>,
    t_end: Option<f64>,
    cfl: Option<f64>,
    quadrature: Option<QuadratureSpec>,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemParams,
    pub quadrature: QuadratureSpec,
    pub x_max: f64,
    pub cells: Vec<usize>,
    pub t_end: f64,
    pub cfl: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let raw: ConfigFile = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let problem = ProblemParams {
            b0: raw.b0,
            e_crit: raw.ec,
            eta_burned: raw.eta_l,
            eta_cold: raw.eta_s,
            mu0: raw.mu0.unwrap_or(MU0_DEFAULT),
        };
        let config = Self {
            problem,
            quadrature: raw.quadrature.unwrap_or_default(),
            x_max: raw.xmax.unwrap_or(DEFAULT_X_MAX),
            cells: raw.cells.unwrap_or_else(|| DEFAULT_CELLS.to_vec()),
            t_end: raw.t_end.unwrap_or(DEFAULT_T),
            cfl: raw.cfl.unwrap_or(SimConfig::default().cfl),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Ok(Self::from_json(&text)?)
    }

    fn validate(&self) -> Result<(), Error> {
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) => Error::InvalidConfig(m),
            other => other,
        };
        self.problem.validate().map_err(wrap)?;
        self.quadrature.validate().map_err(wrap)?;
        if self.cells.is_empty() {
            return Err(Error::InvalidConfig("cells must not be empty".into()));
        }
        for &n in &self.cells {
            Mesh1D::new(n, self.x_max).map_err(wrap)?;
        }
        SimConfig {
            t_end: self.t_end,
            cfl: self.cfl,
            output_times: vec![],
        }
        .validate()
        .map_err(wrap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "magdiff", version, about = "Sharp-front magnetic diffusion: exact solution, simulator and comparison")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Knee field, front constant and the two knee-field curves.
    Solve(SolveArgs),
    /// Similarity profile and the physical fields at one time.
    Profile(ProfileArgs),
    /// Run the simulator and write one CSV per output time.
    Simulate(SimulateArgs),
    /// Mesh-refinement comparison of the simulator against the exact solution.
    Compare(CompareArgs),
    /// Reduced constants over a grid of field and resistivity ratios.
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON experiment description.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Samples of the knee-field curves.
    #[arg(long, default_value_t = SCAN_POINTS)]
    pub points: usize,
    /// `json`: constants and curve; `csv`: the curve only.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub t: f64,
    /// Nodes of the similarity profile.
    #[arg(long, default_value_t = DEFAULT_PROFILE_POINTS)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment description.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; one file per mesh and output time.
    #[arg(long)]
    pub out: PathBuf,
    /// Output times (default: the config's t_end).
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// Mesh sizes (default: the largest configured mesh).
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comparison time (default: the config's t_end).
    #[arg(long)]
    pub t: Option<f64>,
    /// Mesh sizes, ascending (default: the config's cells).
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Optional config; only its quadrature settings are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field ratios B0/sqrt(2 mu0 ec).
    #[arg(long, value_delimiter = ',', required = true)]
    pub b: Vec<f64>,
    /// Resistivity ratios etaL/etaS.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// 12 significant digits with a signed exponent, e.g. `1.41421356237e+0`.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        let s = format!("{v:.11e}");
        match s.split_once('e') {
            Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
            _ => s,
        }
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Rewrite every non-integer number in `v` to 12 significant digits.
fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            if let Some(x) = n.as_f64() {
                if let Ok(fixed) = Number::from_str(&fmt_num(x)) {
                    *n = fixed;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::invalid(e.to_string()))?;
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [f64; N]>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    params: &'a ProblemParams,
    constants: &'a SolvedConstants,
    curve: &'a [CurvePoint],
}

pub fn render_solve(config: &RunConfig, points: usize, format: Format) -> Result<String, Error> {
    let (constants, traced) = solve_constants_traced(&config.problem, &config.quadrature)?;
    let curve = if points == SCAN_POINTS {
        traced
    } else {
        knee_curves(&config.problem, &config.quadrature, points)?
    };
    match format {
        Format::Json => to_json(&SolveDocument {
            params: &config.problem,
            constants: &constants,
            curve: &curve,
        }),
        Format::Csv => Ok(csv(
            ["h", "Bc1", "Bc2"],
            curve.iter().map(|c| [c.h, c.from_flux, c.from_energy]),
        )),
    }
}

/// One row per similarity-profile node: `u, f, x = u·x_c(t), B = f, e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTable {
    pub t: f64,
    pub xc: f64,
    pub u: Vec<f64>,
    pub f: Vec<f64>,
    pub x: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    /// Infinite at `u = 0`, where heating never stops.
    pub e: Vec<f64>,
}

pub fn profile_table(config: &RunConfig, t: f64, points: usize) -> Result<ProfileTable, Error> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t must be > 0, got {t}")));
    }
    let constants = crate::exact::solve_constants(&config.problem, &config.quadrature)?;
    let exact = ExactSolution::from_constants(&config.problem, constants, points)?;
    let xc = exact.front_position(t)?;
    let u = exact.profile.u.clone();
    let f = exact.profile.f.clone();
    let e = u
        .iter()
        .map(|&ui| if ui == 0.0 { Ok(f64::INFINITY) } else { exact.energy_at_scaled(ui) })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProfileTable {
        t,
        xc,
        x: u.iter().map(|&ui| ui * xc).collect(),
        b: f.clone(),
        u,
        f,
        e,
    })
}

pub fn render_profile(table: &ProfileTable, format: Format) -> Result<String, Error> {
    match format {
        Format::Json => to_json(table),
        Format::Csv => Ok(csv(
            ["u", "f", "x", "B", "e"],
            (0..table.u.len()).map(|i| [table.u[i], table.f[i], table.x[i], table.b[i], table.e[i]]),
        )),
    }
}

/// Parse a CSV written by this module: header names and numeric rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), Error> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::invalid("empty CSV"))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let row = l
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::invalid(format!("{c:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() == header.len() {
                Ok(row)
            } else {
                Err(Error::invalid(format!("row has {} fields, header {}", row.len(), header.len())))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

pub fn render_snapshot(profile: &FieldProfile) -> String {
    csv(
        ["x", "B", "e"],
        (0..profile.x.len()).map(|i| [profile.x[i], profile.b[i], profile.e[i]]),
    )
}

fn snapshot_name(n: usize, t: f64) -> String {
    format!("sim_N{n}_t{}.csv", fmt_num(t))
}

/// Run every requested mesh and write the snapshots into `dir`. Returns the
/// written paths.
pub fn write_simulation(config: &RunConfig, cells: &[usize], times: &[f64], dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();
    for &n in cells {
        let mesh = Mesh1D::new(n, config.x_max)?;
        let sim = SimConfig {
            cfl: config.cfl,
            ..SimConfig::at_times(times.to_vec())
        };
        for snap in run(&mesh, &config.problem, &sim)? {
            let path = dir.join(snapshot_name(n, snap.t));
            std::fs::write(&path, render_snapshot(&snap)).map_err(|e| io_error(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn compare(config: &RunConfig, t: f64, cells: &[usize]) -> Result<ComparisonReport, Error> {
    let opts = CompareOptions {
        x_max: config.x_max,
        cfl: config.cfl,
    };
    build_report(&config.problem, t, cells, &config.quadrature, &opts)
}

pub fn render_scan(b: &[f64], r: &[f64], q: &QuadratureSpec, format: Format) -> Result<String, Error> {
    let rows = scan_table(b, r, q);
    match format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("b,r,Hcal,Bcal,status\n");
            for row in &rows {
                let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
                let status = match &row.failure {
                    None => "ok".to_owned(),
                    Some(m) => format!("\"failed: {}\"", m.replace('"', "\"\"")),
                };
                let _ = writeln!(s, "{},{},{},{},{status}", fmt_num(row.b), fmt_num(row.r), opt(row.h_cal), opt(row.b_cal));
            }
            Ok(s)
        }
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(path, e)),
        None => match stdout.write_all(text.as_bytes()) {
            // A closed reader (`| head`) is not a failure of the command.
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_error(Path::new("<stdout>"), e)),
            _ => Ok(()),
        },
    }
}

/// Execute one parsed command.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Solve(a) => {
            let config = RunConfig::load(&a.common.config)?;
            let text = render_solve(&config, a.points, a.format)?;
            emit(a.common.out.as_deref(), &text, stdout)
        }
        Command::Profile(a) => {
            let config = RunConfig::load(&a.common.config)?;
            let table = profile_table(&config, a.t, a.points)?;
            emit(a.common.out.as_deref(), &render_profile(&table, a.format)?, stdout)
        }
        Command::Simulate(a) => {
            let config = RunConfig::load(&a.config)?;
            let times = if a.t.is_empty() { vec![config.t_end] } else { a.t };
            let cells = if a.cells.is_empty() {
                vec![*config.cells.iter().max().expect("validated non-empty")]
            } else {
                a.cells
            };
            for path in write_simulation(&config, &cells, &times, &a.out)? {
                let _ = writeln!(stdout, "{}", path.display());
            }
            Ok(())
        }
        Command::Compare(a) => {
            let config = RunConfig::load(&a.common.config)?;
            let t = a.t.unwrap_or(config.t_end);
            let cells = if a.cells.is_empty() { config.cells.clone() } else { a.cells };
            let report = compare(&config, t, &cells)?;
            emit(a.common.out.as_deref(), &to_json(&report)?, stdout)?;
            if let Some(domain) = report.entries.iter().find_map(|e| match &e.error {
                Some(err @ Error::DomainTooSmall { .. }) => Some(err.clone()),
                _ => None,
            }) {
                return Err(domain.into());
            }
            match report.verdict {
                Verdict::Pass => Ok(()),
                Verdict::Fail => Err(CliError::VerdictFailed(report.reasons)),
            }
        }
        Command::Scan(a) => {
            let q = match &a.config {
                Some(path) => RunConfig::load(path)?.quadrature,
                None => QuadratureSpec::default(),
            };
            emit(a.out.as_deref(), &render_scan(&a.b, &a.r, &q, a.format)?, stdout)
        }
    }
}

/// Parse `args`, run, report errors on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
