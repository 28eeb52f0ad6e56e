//! `finsler`: tensors, classification, oracle verification, ODE checks and
//! the acceptance suite from the command line.
//!
//! Exit status: 0 on success, 1 when a check or the suite fails, 2 on
//! configuration errors, 3 on domain errors (guarded singularities, points
//! outside the family domain).

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use finsler_core::classifier::{chebyshev_grid, DEFAULT_GRID_SIZE, DEFAULT_TOL};
use finsler_core::ode_lab::{
    ode_report, shen_berwald_phi_check, shen_landsberg_phi_check, special_case_check, OdeResidualReport, CSV_HEADER,
};
use finsler_core::report::{bundle_json, bundle_rows, envelope, to_json_string};
use finsler_core::suite::{run_suite, seeded_directions, SuiteConfig, DEFAULT_SEED};
use finsler_core::{
    classify, fixtures, verify_point, Direction64, FinslerError, Frame, MetricFixture, MetricPoint64, PhiFamily,
    PhiSpec64, QSpec,
};

/// Largest closed-form-vs-oracle relative deviation accepted by `verify`.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "finsler", version, about = "Fundamental tensors of (alpha,beta)-Finsler metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// g, g^-1, C, T and T raised at one direction y
    Tensors(Common),
    /// Riemannian / T-condition / sigma-T-condition verdict on an s-grid
    Classify(Common),
    /// Closed forms against exact differentiation of F^2
    Verify(VerifyArgs),
    /// ODE residuals and closed-form phi against quadrature
    OdeCheck(Common),
    /// Full acceptance battery
    Suite(SuiteArgs),
}

#[derive(Args)]
struct Common {
    /// Family name, e.g. randers, kropina, shen_berwald, shen_landsberg, asanov, linear_sqrt
    #[arg(long)]
    phi: String,
    /// Family parameters as a JSON object, e.g. '{"c1":1,"c2":0.5}'
    #[arg(long, default_value = "{}")]
    params: String,
    /// Constant factor c3 in phi
    #[arg(long)]
    c3: Option<f64>,
    /// Bundled fixture name or path to a fixture JSON file
    #[arg(long, default_value = "standard")]
    fixture: String,
    /// Comma-separated direction y (defaults to the fixture's y)
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Number of s-grid points
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid: usize,
    #[arg(long, env = "FINSLER_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Extra seeded random directions besides y
    #[arg(long, default_value_t = 8)]
    directions: usize,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid: usize,
    /// Random directions per family in the oracle criterion
    #[arg(long, default_value_t = 20)]
    directions: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Config(String),
    Domain(String),
    /// The report was produced but a check did not pass.
    Check(String),
}

impl From<FinslerError> for Failure {
    fn from(e: FinslerError) -> Self {
        if e.is_domain_error() {
            Failure::Domain(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Tensors(c) => tensors(c),
        Command::Classify(c) => classify_cmd(c),
        Command::Verify(v) => verify(v),
        Command::OdeCheck(c) => ode_check(c),
        Command::Suite(s) => suite(s),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("domain error: {msg}");
            ExitCode::from(3)
        }
    }
}

struct Setup {
    mp: MetricPoint64,
    fixture: MetricFixture,
    spec: PhiSpec64,
}

fn load_fixture(name: &str) -> CliResult<MetricFixture> {
    let text = match fixtures::source(name) {
        Some(t) => t.to_string(),
        None => fs::read_to_string(name).map_err(|e| config(format!("cannot read fixture {name}: {e}")))?,
    };
    MetricFixture::from_json(&text).map_err(|e| config(format!("fixture {name}: {e}")))
}

/// `ShenLandsberg`, `shen-landsberg` and `shen_landsberg` all name the same family.
fn normalize_family(name: &str) -> String {
    let mut out = String::new();
    for (i, ch) in name.chars().enumerate() {
        if ch.is_ascii_uppercase() && i > 0 && !out.ends_with('_') {
            out.push('_');
        }
        out.push(if ch == '-' { '_' } else { ch.to_ascii_lowercase() });
    }
    out
}

fn parse_params(text: &str) -> CliResult<Value> {
    let v: Value = serde_json::from_str(text).map_err(|e| config(format!("--params is not valid JSON: {e}")))?;
    if !v.is_object() {
        return Err(config("--params must be a JSON object"));
    }
    Ok(v)
}

fn check_common(c: &Common) -> CliResult<()> {
    if c.grid < 3 {
        return Err(config(format!("--grid must be at least 3, got {}", c.grid)));
    }
    if !(c.tol > 0.0) {
        return Err(config(format!("--tol must be positive, got {}", c.tol)));
    }
    Ok(())
}

fn setup(c: &Common) -> CliResult<Setup> {
    check_common(c)?;
    let fixture = load_fixture(&c.fixture)?;
    let mp = fixture.to_metric_point::<f64>()?;
    let mut v = json!({"family": normalize_family(&c.phi), "params": parse_params(&c.params)?});
    if let Some(c3) = c.c3 {
        v["c3"] = json!(c3);
    }
    let mut spec = PhiSpec64::from_json(&v)?;
    if spec.b_sq().is_some_and(f64::is_nan) {
        spec = spec.with_b_sq(mp.b_sq);
    }
    Ok(Setup { mp, fixture, spec })
}

fn direction(c: &Common, fixture: &MetricFixture) -> CliResult<Direction64> {
    let y = match &c.y {
        Some(text) => text
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| config(format!("--y component {t:?}: {e}"))))
            .collect::<CliResult<Vec<f64>>>()?,
        None => fixture.y.clone().ok_or_else(|| config("no direction: pass --y or use a fixture with \"y\""))?,
    };
    Ok(Direction64::new(y))
}

fn emit(out: &Output, command: &str, result: &Value, csv_rows: impl FnOnce() -> CsvTable) -> CliResult<()> {
    let text = match out.format {
        Format::Json => to_json_string(&envelope(command, Some(out.seed), result)?),
        Format::Csv => csv_rows().render()?,
    };
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|e| config(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| config(format!("stdout: {e}"))),
    }
}

struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn render(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| config(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| config(format!("csv: {e}")))
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_value<S: serde::Serialize>(x: &S) -> CliResult<Value> {
    serde_json::to_value(x).map_err(|e| config(e.to_string()))
}

fn tensors(c: &Common) -> CliResult<()> {
    let Setup { mp, fixture, spec } = setup(c)?;
    let y = direction(c, &fixture)?;
    let bundle = Frame::new(&mp, &y, &spec)?.bundle()?;
    let mut result = bundle_json(&bundle)?;
    result["phi"] = spec.to_json();
    result["y"] = json!(y.as_slice());
    emit(&c.output, "tensors", &result, || CsvTable {
        header: vec!["tensor", "i", "j", "k", "l", "value"],
        rows: bundle_rows(&bundle)
            .into_iter()
            .map(|(name, idx, v)| {
                let mut row = vec![name.to_string()];
                row.extend((0..4).map(|p| idx.get(p).map(|i| i.to_string()).unwrap_or_default()));
                row.push(num(v));
                row
            })
            .collect(),
    })
}

fn family_grid(spec: &PhiSpec64, b_sq: f64, n: usize) -> Vec<f64> {
    let b = b_sq.sqrt();
    if spec.is_positive_only() {
        chebyshev_grid(0.05 * b, 0.95 * b, n)
    } else {
        chebyshev_grid(-0.95 * b, 0.95 * b, n)
    }
}

fn classify_cmd(c: &Common) -> CliResult<()> {
    let Setup { mp, spec, .. } = setup(c)?;
    let grid = family_grid(&spec, mp.b_sq, c.grid);
    let verdict = classify(&mp, &spec, &grid, c.tol)?;
    let mut result = to_value(&verdict)?;
    result["phi"] = spec.to_json();
    emit(&c.output, "classify", &result, || {
        let mut rows = vec![vec!["kind".to_string(), to_value(&verdict.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()]];
        rows.extend(verdict.residuals.iter().map(|(k, v)| vec![k.clone(), num(*v)]));
        CsvTable { header: vec!["quantity", "value"], rows }
    })
}

fn verify(v: &VerifyArgs) -> CliResult<()> {
    let c = &v.common;
    let Setup { mp, fixture, spec } = setup(c)?;
    let mut directions = Vec::new();
    if c.y.is_some() || fixture.y.is_some() {
        directions.push(direction(c, &fixture)?);
    }
    directions.extend(seeded_directions(&mp, &spec, v.directions, c.output.seed)?);
    if directions.is_empty() {
        return Err(config("no directions to verify"));
    }
    let points = directions.iter().map(|y| verify_point(&mp, y, &spec)).collect::<Result<Vec<_>, _>>()?;
    let max_rel = points.iter().map(|p| p.max_rel).fold(0.0, f64::max);
    let passed = max_rel <= VERIFY_TOL;
    let result = json!({
        "phi": spec.to_json(),
        "points": to_value(&points)?,
        "max_rel": max_rel,
        "threshold": VERIFY_TOL,
        "passed": passed,
    });
    emit(&c.output, "verify", &result, || CsvTable {
        header: vec!["point", "s", "quantity", "max_abs", "max_rel", "scale"],
        rows: points
            .iter()
            .enumerate()
            .flat_map(|(k, p)| {
                p.comparisons.iter().map(move |r| {
                    vec![k.to_string(), num(p.s), r.quantity.clone(), num(r.max_abs), num(r.max_rel), num(r.scale)]
                })
            })
            .collect(),
    })?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("max_rel {max_rel:e} exceeds {VERIFY_TOL:e}")))
    }
}

fn ode_table(rep: &OdeResidualReport) -> CsvTable {
    CsvTable {
        header: CSV_HEADER.to_vec(),
        rows: rep.rows().into_iter().map(|r| r.iter().map(|&x| opt(x)).collect()).collect(),
    }
}

fn ode_check(c: &Common) -> CliResult<()> {
    check_common(c)?;
    if normalize_family(&c.phi) == "special" {
        return special(c);
    }
    let Setup { mp, spec, .. } = setup(c)?;
    let b_sq = spec.b_sq().unwrap_or(mp.b_sq);
    let grid = family_grid(&spec, b_sq, c.grid);
    let (result, table, passed) = match spec.family {
        PhiFamily::ShenBerwald { c: cb, b_sq } => {
            let rep = shen_berwald_phi_check(cb, b_sq, &grid)?;
            (to_value(&rep)?, ode_table(&rep.ode), rep.passed)
        }
        PhiFamily::ShenLandsberg { c1, c2, b_sq } => {
            let rep = shen_landsberg_phi_check(c1, c2, b_sq, &grid)?;
            (to_value(&rep)?, ode_table(&rep.ode), rep.passed)
        }
        _ => {
            let q = QSpec::FromPhi(Box::new(spec.clone()));
            let rep = ode_report(spec.family_name(), &q, b_sq, &grid, Some((&spec, spec.reference_s())))?;
            (to_value(&rep)?, ode_table(&rep), true)
        }
    };
    let mut result = result;
    result["phi"] = spec.to_json();
    emit(&c.output, "ode-check", &result, || table)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check("ode-check report did not pass".into()))
    }
}

/// The arctan closed form (no linear term) against quadrature; params `c1` and optional `b_sq`.
fn special(c: &Common) -> CliResult<()> {
    let params = parse_params(&c.params)?;
    let c1 = params["c1"].as_f64().ok_or_else(|| config("special: missing numeric param \"c1\""))?;
    let b_sq = match params.get("b_sq") {
        Some(v) => v.as_f64().ok_or_else(|| config("special: \"b_sq\" must be a number"))?,
        None => load_fixture(&c.fixture)?.to_metric_point::<f64>()?.b_sq,
    };
    let b = b_sq.sqrt();
    let grid = chebyshev_grid(0.05 * b, 0.95 * b, c.grid);
    let rep = special_case_check(c1, b_sq, &grid)?;
    let table = CsvTable {
        header: CSV_HEADER.to_vec(),
        rows: (0..rep.grid.len())
            .map(|k| {
                vec![num(rep.grid[k]), String::new(), String::new(), num(rep.closed[k]), num(rep.quadrature[k]), num(rep.ratio[k])]
            })
            .collect(),
    };
    emit(&c.output, "ode-check", &to_value(&rep)?, || table)?;
    if rep.passed {
        Ok(())
    } else {
        Err(Failure::Check(format!("ratio spread {:e}", rep.ratio_spread)))
    }
}

fn suite(s: &SuiteArgs) -> CliResult<()> {
    if s.grid < 3 {
        return Err(config(format!("--grid must be at least 3, got {}", s.grid)));
    }
    let cfg = SuiteConfig { seed: s.output.seed, directions_per_family: s.directions, grid_size: s.grid };
    let report = run_suite(&cfg);
    for c in &report.criteria {
        eprintln!("criterion {}: {} {} [{:.1} ms]", c.id, if c.passed { "PASS" } else { "FAIL" }, c.name, c.elapsed_ms);
    }
    // timings vary run to run, so CSV leaves them out
    emit(&s.output, "suite", &to_value(&report)?, || CsvTable {
        header: vec!["criterion", "name", "passed"],
        rows: report.criteria.iter().map(|c| vec![c.id.to_string(), c.name.to_string(), c.passed.to_string()]).collect(),
    })?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report.criteria.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
        Err(Failure::Check(format!("criteria {} failed", failed.join(", "))))
    }
}
