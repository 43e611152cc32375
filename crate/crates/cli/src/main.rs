mod converge;
mod error;
mod run;
mod scenario;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use momlab_core::suite::{parse_suite, run_suite, Module, SuiteOptions};
use serde_json::{json, Value};

use crate::converge::{Quantity, EXPECTED_ORDER, ORDER_WINDOW};
use crate::error::{CliError, CliResult};
use crate::scenario::{load_source, parse, BUNDLED};

/// Version of the manifest layout.
const MANIFEST_SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "momlab", version, about = "Momentum-map verification and classical/quantum dynamics lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write diagnostics, snapshots and a manifest.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        hbar: Option<f64>,
        /// `dotted.key=value`, applied after the file is read. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the verification suite: `all` or one module.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every residual tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol: f64,
        /// Directory for report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study with a fitted convergence order.
    Converge {
        #[arg(long)]
        quantity: String,
        /// Phase-grid scenario for `transport`.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 3)]
        refinements: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled scenarios, suite modules and convergence quantities.
    List,
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn versions() -> Value {
    json!({ "momlab_cli": env!("CARGO_PKG_VERSION"), "momlab_core": momlab_core::VERSION })
}

fn cmd_run(spec: &str, out: &Path, seed: Option<u64>, hbar: Option<f64>, mut overrides: Vec<String>) -> CliResult<()> {
    let start = Instant::now();
    if let Some(s) = seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(h) = hbar {
        overrides.push(format!("hbar={h:?}"));
    }
    let mut s = parse(&load_source(spec)?, &overrides)?;
    fs::create_dir_all(out)?;
    let mut o = run::run(&mut s, out)?;
    run::write_diagnostics(out, &mut o)?;
    let summary = o.summary();
    let failures: BTreeMap<String, Value> = s
        .tolerances
        .iter()
        .filter_map(|(k, tol)| {
            let v = summary.get(k).copied().unwrap_or(f64::NAN);
            (v.is_nan() || v > *tol).then(|| (k.clone(), json!({ "max_abs": v, "tolerance": tol })))
        })
        .collect();
    let status = if failures.is_empty() { "passed" } else { "failed" };
    let manifest = json!({
        "schema": MANIFEST_SCHEMA,
        "command": "run",
        "versions": versions(),
        "scenario": s,
        "overrides": overrides,
        "derived": o.derived,
        "outputs": o.files,
        "summary": summary,
        "tolerance_failures": failures,
        "status": status,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    for (k, v) in &summary {
        let tol = s.tolerances.get(k).map(|t| format!(" (tolerance {t:e})")).unwrap_or_default();
        println!("{k}: max |value| {v:e}{tol}");
    }
    println!("{}: {status}, outputs in {}", s.name, out.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("tolerances exceeded: {}", failures.keys().cloned().collect::<Vec<_>>().join(", "))))
    }
}

fn cmd_verify(suite: &str, seed: Option<u64>, tol: f64, out: Option<&Path>) -> CliResult<()> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Schema(format!("--tol must be positive, got {tol}")));
    }
    let modules = parse_suite(suite)?;
    let mut opts = SuiteOptions { tol_scale: tol, ..SuiteOptions::default() };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let report = run_suite(&modules, opts)?;
    for e in &report.entries {
        let verdict = if e.ok { "ok" } else { "PROBLEM" };
        println!("{:<8} {:<15} {:?} {} residual {:.2e} tol {:.1e}", verdict, e.module.name(), e.role, e.report.name, e.report.max_residual(), e.report.tolerance);
    }
    println!("checks passed: {}, controls failed: {}", report.checks_passed, report.controls_failed);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &report)?;
    }
    if report.success() {
        Ok(())
    } else {
        let bad: Vec<_> = report.failures().map(|e| e.report.name.clone()).collect();
        Err(CliError::Failed(format!("suite problems: {}", bad.join(", "))))
    }
}

fn cmd_converge(quantity: &str, spec: Option<&str>, overrides: &[String], refinements: usize, seed: Option<u64>, out: Option<&Path>) -> CliResult<()> {
    let start = Instant::now();
    let q: Quantity = quantity.parse()?;
    let scenario = match spec {
        Some(spec) => Some(parse(&load_source(spec)?, overrides)?),
        None if q == Quantity::Transport => Some(parse(&load_source("harmonic_kvn")?, overrides)?),
        None => None,
    };
    let seed = seed.unwrap_or(SuiteOptions::default().seed);
    let study = converge::run_study(q, scenario.as_ref(), refinements, seed)?;
    for l in &study.levels {
        println!("level {} nodes {} h {:.4e} dt {:.4e} error {:.4e}", l.level, l.nodes, l.h, l.dt, l.error);
    }
    let slope = study.table.slope;
    match slope {
        Some(k) => println!("{}: fitted order {k:.3} (expected {EXPECTED_ORDER} ± {ORDER_WINDOW})", q.name()),
        None => println!("{}: errors not monotone, no order fitted", q.name()),
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        converge::write_csv(fs::File::create(dir.join("convergence.csv"))?, &study)?;
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "command": "converge",
            "versions": versions(),
            "quantity": q,
            "scenario": scenario,
            "refinements": refinements,
            "seed": seed,
            "outputs": [{ "file": "convergence.csv", "columns": ["level", "nodes", "h", "dt", "error"] }],
            "slope": slope,
            "monotone": study.table.monotone,
            "expected_order": EXPECTED_ORDER,
            "order_window": ORDER_WINDOW,
            "status": if study.passed() { "passed" } else { "failed" },
            "wall_time_s": start.elapsed().as_secs_f64(),
        });
        write_json(&dir.join("manifest.json"), &manifest)?;
    }
    if study.passed() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} order {slope:?} outside {EXPECTED_ORDER} ± {ORDER_WINDOW}", q.name())))
    }
}

fn cmd_list() {
    println!("scenarios:");
    for (name, text) in BUNDLED {
        let system = parse(text, &[]).map(|s| s.system.name()).unwrap_or("?");
        println!("  {name:<24} {system}");
    }
    println!("suites:\n  all");
    for m in Module::ALL {
        println!("  {}", m.name());
    }
    println!("quantities:");
    for q in Quantity::ALL {
        println!("  {}", q.name());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if matches!(cli.command, Command::Verify { .. }) { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run { scenario, out, seed, hbar, overrides } => cmd_run(&scenario, &out, seed, hbar, overrides),
        Command::Verify { suite, seed, tol, out } => cmd_verify(&suite, seed, tol, out.as_deref()),
        Command::Converge { quantity, scenario, overrides, refinements, seed, out } => {
            cmd_converge(&quantity, scenario.as_deref(), &overrides, refinements, seed, out.as_deref())
        }
        Command::List => {
            cmd_list();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("momlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
