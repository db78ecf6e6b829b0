//! `nlpme`: run scenarios, sweeps, the operator battery and report consolidation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlpme_core::experiments::{emit_report, error_exit_code, run_scenario, run_sweep_file, split_override};
use nlpme_core::fracops::run_check_ops;

#[derive(Parser)]
#[command(name = "nlpme", version, about = "Nonlocal porous-medium numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a TOML or JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key.path=value`, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run every combination of a sweep spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Operator battery: eigenfunctions, domination, convergence, identities.
    CheckOps {
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Consolidate the run reports under a directory.
    Report { dir: PathBuf },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => {
            let mut pairs = Vec::new();
            for o in &overrides {
                match split_override(o) {
                    Ok((k, v)) => pairs.push((k.to_string(), v.to_string())),
                    Err(e) => return fail(2, e),
                }
            }
            match run_scenario(&config, &pairs) {
                Ok(out) => {
                    for c in &out.report.checks {
                        let tag = if c.pass { "PASS" } else { "FAIL" };
                        let note = if c.asserted { "" } else { " (reported)" };
                        println!("{tag} {} slack={:.3e} tol={:.1e}{note}", c.name, c.slack, c.tol);
                    }
                    if let Some(e) = &out.report.error {
                        println!("ABORT at t={}: {e}", out.report.t_reached);
                    }
                    println!("{} {}", out.report.status.as_str(), out.dir.display());
                    ExitCode::from(out.report.status.exit_code() as u8)
                }
                Err(e) => fail(error_exit_code(&e) as u8, e),
            }
        }
        Command::Sweep { spec, jobs } => match run_sweep_file(&spec, jobs) {
            Ok(summary) => {
                print!("{}", summary.to_csv());
                ExitCode::from(if summary.all_pass() { 0 } else { 1 })
            }
            Err(e) => fail(error_exit_code(&e) as u8, e),
        },
        Command::CheckOps { json } => match run_check_ops() {
            Ok(report) => {
                for c in &report.checks {
                    let tag = if c.pass { "PASS" } else { "FAIL" };
                    let note = if c.asserted { "" } else { " (reported)" };
                    println!("{tag} {} measured={:.3e} tol={:.1e}{note}", c.name, c.measured, c.tol);
                }
                println!("elapsed {:.2}s", report.elapsed_seconds);
                if let Some(path) = json {
                    let text = serde_json::to_string_pretty(&report).expect("report serializes");
                    if let Err(e) = std::fs::write(&path, text) {
                        return fail(3, format!("{}: {e}", path.display()));
                    }
                }
                ExitCode::from(if report.pass { 0 } else { 1 })
            }
            Err(e) => fail(3, e),
        },
        Command::Report { dir } => match emit_report(&dir) {
            Ok(summary) => {
                println!("{} runs, {} missing, status {}", summary.runs.len(), summary.missing.len(), summary.status);
                ExitCode::from(if summary.pass { 0 } else { 1 })
            }
            Err(e) => fail(error_exit_code(&e) as u8, e),
        },
    }
}
