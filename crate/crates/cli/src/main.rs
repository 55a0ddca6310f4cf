//! `cylfinsler`: validate, audit and explore cylindrically symmetric Finsler
//! metrics described by JSON spec files.
//!
//! Exit codes: 0 pass, 1 a check failed, 2 usage, schema or I/O error,
//! 3 constraint violation. `CYLFINSLER_THREADS` sets the worker count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use cylfinsler::catalog::{self, CatalogEntry, Param, Params};
use cylfinsler::flatness::{flatness_report, DEFAULT_FLAT_TOL};
use cylfinsler::geodesic::{integrate_geodesic, GeodesicConfig};
use cylfinsler::grid::SamplingGrid;
use cylfinsler::report::{
    display_finding, identity_audit, im_audit, inverse_finding, sample_stats, trace_csv, ReportDocument,
    SpecSummary, Verdict, AUDIT_G6, SAMPLE_POINTS,
};
use cylfinsler::specfile::{load_spec, LoadError, LoadedSpec};
use cylfinsler::spray::{spray_coeffs_at, spray_oracle_at};
use cylfinsler::tensor::{det_identity_at, fundamental_tensor_at, inverse_check_at, inverse_closed_at, inverse_numeric, invariants};
use cylfinsler::{BasePoint, Error, Tangent};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONSTRAINT: u8 = 3;

/// Determinant identity and spray-route tolerances used by `tensor`.
const DET_TOL: f64 = 1e-8;
const SPRAY_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "cylfinsler", version, about = "Cylindrically symmetric Finsler metric toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct GridArgs {
    /// Axis overrides, e.g. `x0=-1:1:5,z=-10:10:21,r=0.001:0.9:11,sigma=-1:1:9`.
    #[arg(long)]
    grid: Option<String>,
    /// Seed recorded in the report and used for every random sample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Finsler conditions on a grid.
    Validate {
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Projective-flatness residuals and Hamel's equations on a grid.
    Flatness {
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = DEFAULT_FLAT_TOL)]
        tol: f64,
    },
    /// Integrate a geodesic with RK4 and write a CSV trace.
    Geodesic {
        spec: PathBuf,
        /// Start point `x0,x1,…,xn`.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Initial velocity `v0,v1,…,vn`.
        #[arg(long, allow_hyphen_values = true)]
        v0: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fundamental tensor, inverses, invariants and spray at one point.
    Tensor {
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Built-in metrics.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Printed-formula audits: integral identity, I_m recursion, closed-form
    /// inverse and display formulas.
    Audit {
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Show {
        name: String,
        /// Parameter override `key=value`; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Constraint(_) | Error::Condition { .. } => EXIT_CONSTRAINT,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    let outcome = match cli.command {
        Command::Validate { spec, grid } => validate(&spec, &grid),
        Command::Flatness { spec, grid, tol } => flatness(&spec, &grid, tol),
        Command::Geodesic {
            spec,
            x0,
            v0,
            step,
            steps,
            out,
        } => geodesic(&spec, &x0, &v0, step, steps, out),
        Command::Tensor { spec, x, y } => tensor(&spec, &x, &y),
        Command::Catalog { action } => catalog_cmd(action),
        Command::Audit { spec, seed } => audit(spec.as_deref(), seed),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CYLFINSLER_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| usage(format!("CYLFINSLER_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot start {n} worker threads: {e}")))
}

fn build_grid(loaded: &LoadedSpec, args: &GridArgs) -> Result<SamplingGrid, Failure> {
    let mut grid = SamplingGrid::default_for(&loaded.spec);
    grid.seed = args.seed;
    if let Some(flags) = &args.grid {
        grid = grid.with_flags(flags).map_err(|e| usage(e.to_string()))?;
    }
    grid.validate(&loaded.spec).map_err(|e| usage(e.to_string()))?;
    Ok(grid)
}

fn base_report(command: &str, loaded: &LoadedSpec, grid: Option<&SamplingGrid>, seed: u64) -> ReportDocument {
    let mut doc = ReportDocument::new(command);
    doc.spec = Some(SpecSummary::new(loaded));
    doc.grid = grid.cloned();
    doc.seed = Some(seed);
    if let Some(c) = &loaded.construction {
        doc.insert_check("construction", c);
    }
    doc
}

/// Per-point statistics and the findings they imply.
fn add_samples(doc: &mut ReportDocument, loaded: &LoadedSpec, seed: u64) -> Result<(), Failure> {
    let stats = sample_stats(&loaded.spec, SAMPLE_POINTS, seed);
    doc.errata.extend(inverse_finding(&stats));
    doc.insert_check("samples", &stats);
    if let Some(entry) = &loaded.entry {
        doc.errata.extend(display_finding(entry, SAMPLE_POINTS, seed)?);
    }
    Ok(())
}

/// Write to stdout; a closed pipe (e.g. `| head`) ends the process quietly.
fn write_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(EXIT_USAGE as i32);
    }
}

fn emit(doc: &ReportDocument) -> u8 {
    write_stdout(&doc.to_json());
    match doc.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => EXIT_FAIL,
    }
}

fn validate(path: &std::path::Path, args: &GridArgs) -> Outcome {
    let loaded = load_spec(path)?;
    let grid = build_grid(&loaded, args)?;
    let rep = cylfinsler::tensor::validate_finsler(&loaded.spec, &grid)?;
    let mut doc = base_report("validate", &loaded, Some(&grid), args.seed);
    doc.verdict = Verdict::from_bool(rep.pass);
    if !rep.pass {
        eprintln!(
            "not Finsler: {} of {} nodes fail (phi_min {:e}, omega_min {:e}, lambda_min {:e})",
            rep.failing_count, rep.samples, rep.phi_min, rep.omega_min, rep.lambda_min
        );
    }
    doc.insert_check("finsler", &rep);
    add_samples(&mut doc, &loaded, args.seed)?;
    Ok(emit(&doc))
}

fn flatness(path: &std::path::Path, args: &GridArgs, tol: f64) -> Outcome {
    if tol.is_nan() || tol <= 0.0 {
        return Err(usage(format!("--tol must be positive, got {tol}")));
    }
    let loaded = load_spec(path)?;
    let grid = build_grid(&loaded, args)?;
    let rep = flatness_report(&loaded.spec, &grid, tol)?;
    let mut doc = base_report("flatness", &loaded, Some(&grid), args.seed);
    doc.verdict = Verdict::from_bool(rep.flat);
    doc.insert_check("flatness", &rep);
    add_samples(&mut doc, &loaded, args.seed)?;
    Ok(emit(&doc))
}

fn parse_vector(flag: &str, text: &str, len: usize) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--{flag} `{text}` is not a comma-separated list of numbers")))?;
    if v.len() != len {
        return Err(usage(format!("--{flag} needs {len} components, got {}", v.len())));
    }
    Ok(v)
}

fn geodesic(path: &std::path::Path, x0: &str, v0: &str, step: f64, steps: usize, out: Option<PathBuf>) -> Outcome {
    let loaded = load_spec(path)?;
    let dim = loaded.spec.n + 1;
    let x = BasePoint::from_slice(&parse_vector("x0", x0, dim)?);
    let v = Tangent::from_slice(&parse_vector("v0", v0, dim)?);
    let trace = integrate_geodesic(&loaded.spec, &x, &v, GeodesicConfig { step, max_steps: steps })?;
    let csv = trace_csv(&loaded.spec, &trace)?;
    match out {
        Some(p) => std::fs::write(&p, csv).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?,
        None => write_stdout(&csv),
    }
    eprintln!(
        "{} steps, terminated: {}{}",
        trace.len() - 1,
        trace.termination.as_str(),
        trace.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
    );
    Ok(0)
}

fn matrix_rows(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn tensor(path: &std::path::Path, x: &str, y: &str) -> Outcome {
    let loaded = load_spec(path)?;
    let dim = loaded.spec.n + 1;
    let x = BasePoint::from_slice(&parse_vector("x", x, dim)?);
    let y = Tangent::from_slice(&parse_vector("y", y, dim)?);
    let frame = loaded.spec.frame(&x, &y)?;
    let g = fundamental_tensor_at(&frame);
    let inv = invariants(&frame.p, frame.point());
    let det = det_identity_at(&frame);
    let closed = spray_coeffs_at(&frame)?;
    let oracle = spray_oracle_at(&frame)?;
    let route = closed.rel_diff(&oracle.coeffs);
    let numeric_inverse = inverse_numeric(&g)?;
    let (closed_inverse, _) = inverse_closed_at(&frame)?;
    let inverse = inverse_check_at(&frame)?;

    let mut doc = base_report("tensor", &loaded, None, 0);
    doc.seed = None;
    doc.insert_check(
        "point",
        &json!({ "x": x.to_vec(), "y": y.to_vec(), "F": loaded.spec.eval_f(&x, &y)?,
                 "z": frame.zrs.z, "r": frame.zrs.r, "s": frame.zrs.s, "u": frame.zrs.u }),
    );
    doc.insert_check("invariants", &inv);
    doc.insert_check("g", &matrix_rows(&g));
    doc.insert_check(
        "g_inverse",
        &json!({ "numeric": matrix_rows(&numeric_inverse), "closed_form": matrix_rows(&closed_inverse), "check": inverse }),
    );
    doc.insert_check("det_identity", &det);
    doc.insert_check(
        "spray",
        &json!({ "closed_form": closed, "oracle": oracle.coeffs, "P": oracle.p, "Q": oracle.q, "route_rel_diff": route }),
    );
    if inverse.flagged {
        doc.errata.push(cylfinsler::report::ErratumFinding {
            formula: "closed-form inverse y11".into(),
            at: format!("x={:?}, y={:?}", x.to_vec(), y.to_vec()),
            printed: inverse.printed.y11,
            measured: inverse.implied.y11,
            note: "the LU inverse is used".into(),
        });
    }
    doc.verdict = Verdict::from_bool(det.rel_diff < DET_TOL && route < SPRAY_TOL);
    Ok(emit(&doc))
}

fn parse_params(items: &[String]) -> Result<Params, Failure> {
    let mut params = Params::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("--param `{item}` is not KEY=VALUE")))?;
        let value = match v.trim().parse::<f64>() {
            Ok(x) => Param::Num(x),
            Err(_) => Param::Text(v.trim().to_string()),
        };
        params.insert(k.trim().to_string(), value);
    }
    Ok(params)
}

fn entry_json(e: &CatalogEntry) -> Value {
    let s = &e.spec;
    json!({
        "name": e.name,
        "n": s.n,
        "rho": s.rho,
        "interval": [s.interval.0, s.interval.1],
        "phi": s.phi.describe(),
        "flags": e.flags,
        "params": e.params,
        "errata": e.errata,
        "has_display": e.display.is_some(),
        "spec_file": {
            "name": e.name,
            "n": s.n,
            "rho": s.rho,
            "interval": [s.interval.0, s.interval.1],
            "phi": { "kind": "catalog", "catalog": e.name, "params": e.params },
        },
    })
}

fn catalog_cmd(action: CatalogAction) -> Outcome {
    let doc = match action {
        CatalogAction::List => {
            let entries = catalog::all()?;
            json!({ "entries": entries.iter().map(entry_json).collect::<Vec<_>>() })
        }
        CatalogAction::Show { name, params } => {
            if !catalog::NAMES.contains(&name.as_str()) {
                return Err(usage(format!(
                    "unknown catalog entry `{name}` (expected one of {})",
                    catalog::NAMES.join(", ")
                )));
            }
            let entry = catalog::lookup(&name, &parse_params(&params)?)?;
            let mut v = entry_json(&entry);
            v["display_check"] = json!(entry.display_check(SAMPLE_POINTS, 0)?);
            v
        }
    };
    write_stdout(&(serde_json::to_string_pretty(&doc).expect("plain data") + "\n"));
    Ok(0)
}

fn audit(path: Option<&std::path::Path>, seed: u64) -> Outcome {
    let mut doc = ReportDocument::new("audit");
    doc.seed = Some(seed);
    let mut consistent = true;

    let mut identity = Vec::new();
    for g6 in AUDIT_G6 {
        let (a, finding) = identity_audit(g6)?;
        consistent &= finding.is_none();
        doc.errata.extend(finding);
        identity.push(a);
    }
    doc.insert_check("integral_identity", &identity);

    let (rows, findings) = im_audit()?;
    consistent &= rows
        .iter()
        .skip(1)
        .all(|r| (r.i_corrected - r.i).abs() <= 1e-9 * (1.0 + r.i.abs()));
    doc.insert_check("im_recursion", &rows);
    doc.errata.extend(findings);

    let metrics: Vec<(LoadedSpecOrEntry, String)> = match path {
        Some(p) => {
            let loaded = load_spec(p)?;
            doc.spec = Some(SpecSummary::new(&loaded));
            let name = loaded.spec.name.clone();
            vec![(LoadedSpecOrEntry::Loaded(Box::new(loaded)), name)]
        }
        None => catalog::all()?
            .into_iter()
            .map(|e| {
                let name = e.name.clone();
                (LoadedSpecOrEntry::Entry(Box::new(e)), name)
            })
            .collect(),
    };
    let mut inverse = serde_json::Map::new();
    let mut displays = serde_json::Map::new();
    for (m, name) in &metrics {
        let (spec, entry) = match m {
            LoadedSpecOrEntry::Loaded(l) => (&l.spec, l.entry.as_ref()),
            LoadedSpecOrEntry::Entry(e) => (&e.spec, Some(e.as_ref())),
        };
        let stats = sample_stats(spec, SAMPLE_POINTS, seed);
        consistent &= stats.evaluation_errors == 0;
        doc.errata.extend(inverse_finding(&stats).map(|mut f| {
            f.at = format!("{name}: {}", f.at);
            f
        }));
        inverse.insert(name.clone(), serde_json::to_value(&stats).expect("plain data"));
        if let Some(e) = entry {
            if let Some(check) = e.display_check(SAMPLE_POINTS, seed)? {
                displays.insert(name.clone(), serde_json::to_value(check).expect("plain data"));
            }
            doc.errata.extend(display_finding(e, SAMPLE_POINTS, seed)?);
        }
    }
    doc.insert_check("closed_form_inverse", &inverse);
    doc.insert_check("display_formulas", &displays);
    doc.verdict = Verdict::from_bool(consistent);
    Ok(emit(&doc))
}

enum LoadedSpecOrEntry {
    Loaded(Box<LoadedSpec>),
    Entry(Box<CatalogEntry>),
}
