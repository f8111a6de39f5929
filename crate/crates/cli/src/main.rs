//! `pqcheck`: runs a scenario of integrability checks and writes a JSON
//! report. Exit status 0 when every check meets its expectation, 1 when
//! some check does not, 2 on validation or I/O errors.

mod checks;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use rayon::prelude::*;

use report::{CheckRecord, Outcome, Report, SCHEMA, SCHEMA_VERSION};
use scenario::{Plan, Scenario};

#[derive(Parser, Debug)]
#[command(name = "pqcheck", version, about = "Integrability checks for almost para-quaternionic structures")]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario tolerance; per-check tolerances still apply.
    #[arg(long)]
    tol: Option<f64>,
    /// Report path; falls back to the scenario's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for running checks.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn plan(args: &Args) -> Result<Plan, String> {
    let mut s = Scenario::load(&args.scenario).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(tol) = args.tol {
        s.tol = tol;
    }
    let base = args.scenario.parent().map(PathBuf::from).unwrap_or_default();
    s.validate(&base).map_err(|e| e.to_string())
}

fn run(plan: &Plan, jobs: usize) -> Result<Vec<CheckRecord>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(|| {
        plan.checks
            .par_iter()
            .map(|spec| match checks::run_check(plan, spec) {
                Ok(r) => CheckRecord {
                    name: spec.name.clone(),
                    expect: spec.expect,
                    tol: spec.tol,
                    outcome: Outcome::from_verdict(r.verdict, spec.expect),
                    max_residual: Some(r.max_residual()),
                    report: Some(r),
                    error: None,
                    spec: spec.raw.clone(),
                },
                Err(e) => CheckRecord {
                    name: spec.name.clone(),
                    expect: spec.expect,
                    tol: spec.tol,
                    outcome: Outcome::Error,
                    max_residual: None,
                    report: None,
                    error: Some(e.to_string()),
                    spec: spec.raw.clone(),
                },
            })
            .collect()
    }))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let plan = match plan(&args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("pqcheck: invalid scenario: {e}");
            return ExitCode::from(2);
        }
    };
    let records = match run(&plan, args.jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("pqcheck: {e}");
            return ExitCode::from(2);
        }
    };
    let passed = records.iter().all(|r| r.outcome.ok());
    for r in &records {
        let res = r.max_residual.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        let extra = r.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default();
        eprintln!("{:<28} {:<16} max residual {res}{extra}", r.name, format!("{:?}", r.outcome).to_lowercase());
    }
    let report = Report {
        schema: SCHEMA,
        version: SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        seed: plan.seed,
        tol: plan.tol,
        structure: plan.source.clone(),
        dim: plan.structure.dim(),
        points: plan.points.iter().map(|p| p.coords.clone()).collect(),
        checks: records,
        passed,
    };
    let text = match serde_json::to_string_pretty(&report) {
        Ok(t) => t + "\n",
        Err(e) => {
            eprintln!("pqcheck: cannot serialize report: {e}");
            return ExitCode::from(2);
        }
    };
    match args.out.as_ref().or(plan.output.as_ref()) {
        Some(path) => {
            if let Err(e) = report::write_atomic(path, &text) {
                eprintln!("pqcheck: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
