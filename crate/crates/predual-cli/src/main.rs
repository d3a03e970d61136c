//! Command-line harness: solve configured scenarios, cross-check them with
//! the brute-force oracle, sweep windows, or run the built-in acceptance
//! suite. Human-readable tables go to stdout; `--report` additionally
//! writes the canonical JSON document.

use clap::{Parser, Subcommand};
use predual::acsets::{AcStatus, ReductionAction, ReductionReport};
use predual::config::{load_config, Overrides};
use predual::error::{Error, Result};
use predual::scenario::{
    run_oracle, OracleDocument, ReportDocument, Scenario, ScenarioReport, SCHEMA_VERSION,
};
use predual::verify::{run_all, run_criterion, CriterionResult};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Parser)]
#[command(
    name = "predual",
    version,
    about = "Certified sandwiches around weighted prediction distances"
)]
struct Cli {
    /// Override the grid length of integer/lattice scenarios.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Number of scenario worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Write the canonical JSON report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve every scenario in a config file (primal + dual sandwich).
    Run {
        /// TOML configuration file.
        config: PathBuf,
    },
    /// Solve each scenario with the independent brute-force oracle.
    Oracle {
        /// TOML configuration file.
        config: PathBuf,
    },
    /// Run the built-in acceptance suite.
    Verify {
        /// Run a single criterion (1-9) instead of the whole suite.
        #[arg(long)]
        criterion: Option<usize>,
    },
    /// Re-run each scenario across a list of windows.
    Sweep {
        /// TOML configuration file.
        config: PathBuf,
        /// Ascending window radii replacing both window lists.
        #[arg(long, value_delimiter = ',', required = true)]
        windows: Vec<i64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SandwichViolation { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Run { config } => {
            let overrides = Overrides {
                grid: cli.grid,
                windows: None,
            };
            let scenarios = load_config(config, &overrides)?;
            run_scenarios(&scenarios, cli, "run")
        }
        Cmd::Sweep { config, windows } => {
            let overrides = Overrides {
                grid: cli.grid,
                windows: Some(windows.clone()),
            };
            let scenarios = load_config(config, &overrides)?;
            run_scenarios(&scenarios, cli, "sweep")
        }
        Cmd::Oracle { config } => {
            let overrides = Overrides {
                grid: cli.grid,
                windows: None,
            };
            let scenarios = load_config(config, &overrides)?;
            let mut reports = Vec::with_capacity(scenarios.len());
            for sc in &scenarios {
                let r = run_oracle(sc, &predual::oracle::OracleOptions::default())?;
                println!(
                    "oracle {}: {:.12} (window {})",
                    r.label, r.distance, r.window
                );
                reports.push(r);
            }
            if let Some(path) = &cli.report {
                std::fs::write(path, OracleDocument::new(reports).to_canonical_json()?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { criterion } => {
            let results = match criterion {
                Some(id) => vec![run_criterion(*id)],
                None => run_all(),
            };
            let mut passed = 0usize;
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("criterion {} ({}): {status} — {}", r.id, r.name, r.detail);
                passed += usize::from(r.passed);
            }
            println!("verify: {passed}/{} passed", results.len());
            if let Some(path) = &cli.report {
                std::fs::write(path, verify_json(&results)?)?;
            }
            if passed == results.len() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

/// Solve scenarios (possibly in parallel), print the table in config order,
/// and write the canonical report.
fn run_scenarios(scenarios: &[Scenario], cli: &Cli, mode: &str) -> Result<ExitCode> {
    let reports = solve_all(scenarios, cli.jobs)?;
    for report in &reports {
        print_report(report);
    }
    if let Some(path) = &cli.report {
        std::fs::write(
            path,
            ReportDocument::new(mode, reports).to_canonical_json()?,
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Fan scenarios out to worker threads; results keep configuration order,
/// and the first error in that order wins.
fn solve_all(scenarios: &[Scenario], jobs: usize) -> Result<Vec<ScenarioReport>> {
    let n = scenarios.len();
    let workers = jobs.max(1).min(n.max(1));
    if workers <= 1 {
        return scenarios.iter().map(Scenario::run).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<ScenarioReport>>>> =
        (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let outcome = scenarios[i].run();
                *slots[i].lock().expect("result slot") = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot")
                .expect("worker finished")
        })
        .collect()
}

fn describe_reduction(r: &ReductionReport) -> String {
    let status = match &r.complement_status {
        AcStatus::ProvenAc { rule } => format!("proven AC: {rule}"),
        AcStatus::KnownNotAc { .. } => "known not AC".into(),
        AcStatus::Unknown => "not proven AC".into(),
    };
    match &r.action {
        ReductionAction::AlreadyAc => format!("no singular part ({status})"),
        ReductionAction::DroppedSingular { atoms } => {
            format!("dropped {atoms} atom(s) ({status})")
        }
        ReductionAction::KeptFull => format!("kept full measure ({status})"),
    }
}

fn print_report(r: &ScenarioReport) {
    println!(
        "== {} (alpha = {}, s = {}, k = {}) ==",
        r.label, r.alpha, r.s, r.k
    );
    println!("   reduction: {}", describe_reduction(&r.reduction));
    for b in &r.primal {
        let mark = if b.converged { "" } else { "  [not converged]" };
        println!("   primal  F={:<5} {:.12}{mark}", b.window, b.bound);
    }
    for c in &r.dual {
        if c.empty {
            println!(
                "   dual    H={:<5} no feasible certificate (bound 0)",
                c.window
            );
        } else if c.rejected {
            println!(
                "   dual    H={:<5} rejected (pin {:.2e}, carrier {:.2e}; bound 0)",
                c.window, c.residuals.pin, c.residuals.carrier
            );
        } else {
            let quad = if c.quadrature_checked {
                format!("quad err {:.2e}", c.quadrature_error)
            } else {
                "quad unchecked".to_string()
            };
            println!(
                "   dual    H={:<5} {:.12} (raw {:.12}, {quad})",
                c.window, c.bound, c.bound_raw
            );
        }
    }
    println!(
        "   sandwich: [{:.12}, {:.12}]  gap {:.3e}  rel {:.3e}",
        r.sandwich.lower, r.sandwich.upper, r.sandwich.gap, r.sandwich.rel_gap
    );
    for reference in &r.references {
        println!("   reference {} = {:.12}", reference.name, reference.value);
    }
    println!("   time: {:.1} ms", r.timing_ms);
}

fn verify_json(results: &[CriterionResult]) -> Result<String> {
    let items: Vec<serde_json::Value> = results
        .iter()
        .map(|r| {
            serde_json::json!({
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "mode": "verify",
        "criteria": items,
    });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Invalid(format!("report serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}
