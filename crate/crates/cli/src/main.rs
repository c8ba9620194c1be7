use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use banded_esa_core::deficiency::defect_recurrence;
use banded_esa_core::operator::OperatorSpec;
use banded_esa_core::report::{
    load_rhs, load_spec, run_check_criterion, run_probe_deficiency, run_solve, run_suite, run_verify_proof_bounds,
    CriterionParams, ProofParams, Report, SolveParams, Status, SuiteCommand,
};
use banded_esa_core::section::Shift;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "banded-esa", version, about = "Self-adjointness diagnostics for banded Hermitian matrices on Z")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Operator spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit the JSON report (default).
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit plot-ready CSV instead of the JSON report.
    #[arg(long, global = true)]
    csv: bool,
    /// No status line on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Row-sum ratio limsup test.
    CheckCriterion {
        #[arg(long, default_value_t = 10_000)]
        x_max: i64,
        #[arg(long, default_value_t = 8)]
        shells: usize,
        #[arg(long, default_value_t = 3.0)]
        k0: f64,
    },
    /// Solve (I - sign i A) f = g on an adaptive window.
    Solve {
        /// JSON list of [x, re, im].
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long, default_value = "+1", allow_hyphen_values = true)]
        sign: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Check each inequality of the weighted commutator estimate.
    VerifyProofBounds {
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        x_max: i64,
        /// Plateau for the a-priori ladder.
        #[arg(long, default_value_t = 10.0)]
        plateau: f64,
    },
    /// Shoot the defect solutions of a one-sided Jacobi matrix.
    ProbeDeficiency {
        /// Growth exponent of the built-in one-sided example; ignored with --spec.
        #[arg(long, required_unless_present = "spec")]
        delta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        x_max: i64,
    },
    /// Run the bundled fixture suite.
    RunSuite {
        /// Comma-separated subset of criterion, solve, proof-bounds, deficiency.
        #[arg(long, value_delimiter = ',', default_value = "criterion,solve,proof-bounds,deficiency")]
        commands: Vec<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Internal(format!("{}: {e}", path.display()))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("BANDED_ESA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("BANDED_ESA_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn require_spec(global: &Global) -> Result<OperatorSpec, Failure> {
    let path = global.spec.as_ref().ok_or_else(|| Failure::Usage("--spec is required".into()))?;
    load_spec(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_sign(s: &str) -> Result<Shift, Failure> {
    let v: i32 = s.trim_start_matches('+').parse().map_err(|_| Failure::Usage(format!("--sign must be +1 or -1, got `{s}`")))?;
    Shift::from_sign(v).ok_or_else(|| Failure::Usage(format!("--sign must be +1 or -1, got `{s}`")))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| io_err(p, e))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Internal(e.to_string()))?;
    writeln!(w).map_err(|e| Failure::Internal(e.to_string()))
}

fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    let fail = |e: csv::Error| Failure::Internal(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Internal(e.to_string()))
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn status_line(global: &Global, report: &Report) {
    if !global.quiet {
        eprintln!("{}: {:?}", report.manifest.command, report.status);
        for v in &report.violations {
            eprintln!("  {v}");
        }
    }
}

fn emit(global: &Global, report: &Report, csv: Option<(&[&str], Vec<Vec<String>>)>) -> Result<u8, Failure> {
    match csv {
        Some((header, rows)) if global.csv => write_csv(header, rows, global.out.as_deref())?,
        _ => write_json(report, global.out.as_deref())?,
    }
    status_line(global, report);
    Ok(report.status.exit_code() as u8)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(".certificate.json");
    path.with_file_name(name)
}

fn solution_rows(table: &[(i64, Complex64)]) -> Vec<Vec<String>> {
    table
        .iter()
        .map(|(x, v)| vec![x.to_string(), num(v.re), num(v.im), num(v.norm())])
        .collect()
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    let g = &cli.global;
    match cli.command {
        Command::CheckCriterion { x_max, shells, k0 } => {
            let spec = require_spec(g)?;
            let report = run_check_criterion(&spec, &CriterionParams { x_max, shells, k0 });
            let rows = report.payload["ratios"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|s| vec![s["x"].to_string(), num(s["ratio"].as_f64().unwrap_or(f64::NAN))])
                        .collect()
                })
                .unwrap_or_default();
            emit(g, &report, Some((&["x", "ratio"], rows)))
        }
        Command::Solve { rhs, sign, tol, k } => {
            let spec = require_spec(g)?;
            let shift = parse_sign(&sign)?;
            let rhs = load_rhs(&rhs).map_err(|e| Failure::Usage(format!("{}: {e}", rhs.display())))?;
            let (report, table) = run_solve(&spec, &rhs, &SolveParams { shift, tol, k });
            let rows = table.as_deref().map(solution_rows).unwrap_or_default();
            match &g.out {
                Some(path) => {
                    write_csv(&["x", "re", "im", "abs"], rows, Some(path))?;
                    write_json(&report, Some(&sidecar(path)))?;
                    status_line(g, &report);
                    Ok(report.status.exit_code() as u8)
                }
                None => emit(g, &report, Some((&["x", "re", "im", "abs"], rows))),
            }
        }
        Command::VerifyProofBounds { k, delta, x_max, plateau } => {
            let spec = require_spec(g)?;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Failure::Usage(format!("--delta must lie in (0, 1), got {delta}")));
            }
            let report = run_verify_proof_bounds(&spec, &ProofParams { k, delta, x_max, apriori_plateau: plateau });
            let rows = report.payload["checks"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|c| {
                            vec![
                                c["name"].as_str().unwrap_or_default().to_string(),
                                c["status"].as_str().unwrap_or_default().to_string(),
                                c["margin"].as_f64().map(num).unwrap_or_default(),
                            ]
                        })
                        .collect()
                })
                .unwrap_or_default();
            emit(g, &report, Some((&["name", "status", "margin"], rows)))
        }
        Command::ProbeDeficiency { delta, x_max } => {
            let spec = match (&g.spec, delta) {
                (Some(_), _) => require_spec(g)?,
                (None, Some(d)) if d.is_finite() => OperatorSpec::counterexample(d),
                (None, _) => return Err(Failure::Usage("--delta must be finite".into())),
            };
            let report = run_probe_deficiency(&spec, x_max);
            let rows = if g.csv && report.status != Status::Error {
                let sol = defect_recurrence(&spec, x_max, Shift::Plus)
                    .map_err(|e| Failure::Internal(e.to_string()))?;
                (1..=x_max)
                    .map(|x| {
                        let ln = sol.log_polar(x).map_or(f64::NEG_INFINITY, |(m, _)| m);
                        vec![x.to_string(), num(ln.exp()), num(ln)]
                    })
                    .collect()
            } else {
                Vec::new()
            };
            emit(g, &report, Some((&["x", "abs", "ln_abs"], rows)))
        }
        Command::RunSuite { commands } => {
            let mut selected = Vec::new();
            for name in commands.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
                selected.push(
                    SuiteCommand::parse(name).ok_or_else(|| Failure::Usage(format!("unknown suite command `{name}`")))?,
                );
            }
            let suite = run_suite(&selected).map_err(|e| Failure::Usage(e.to_string()))?;
            if g.csv {
                let rows = suite
                    .items
                    .iter()
                    .map(|i| {
                        vec![
                            serde_json::to_value(i.command).unwrap().as_str().unwrap_or_default().to_string(),
                            i.fixture.clone(),
                            format!("{:?}", i.expected).to_lowercase(),
                            format!("{:?}", i.status).to_lowercase(),
                            i.matches.to_string(),
                            format!("{:.3}", i.seconds),
                        ]
                    })
                    .collect::<Vec<_>>();
                write_csv(&["command", "fixture", "expected", "status", "matches", "seconds"], rows, g.out.as_deref())?;
            } else {
                write_json(&suite, g.out.as_deref())?;
            }
            if !g.quiet {
                for i in &suite.items {
                    let mark = if i.matches { "pass" } else { "FAIL" };
                    eprintln!("{mark} {:?} {} -> {:?} (expected {:?})", i.command, i.fixture, i.status, i.expected);
                }
            }
            Ok(suite.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Internal(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
