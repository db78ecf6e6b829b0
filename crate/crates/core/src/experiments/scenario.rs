//! One configured run: validate, integrate, check, write artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{load_config_value, resolve_output_dir, ScenarioConfig, SCHEMA_VERSION};
use super::initial::{make_initial, InitialDataSpec};
use crate::diagnostics::{
    first_energy_report, linf_report, lp_energy_report, mass_report, second_energy_report, smoothing_fit, CheckResult,
    LedgerBuilder, RunLedger, SmoothingFit,
};
use crate::error::{Error, Result};
use crate::fracops::SymbolTable;
use crate::grid::{inverse_transform, make_grid, transform, write_csv, write_snapshot, Field, Grid};
use crate::nonlinearity::NonlinearityKind;
use crate::stepper::{run, RunOptions, Stepper};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    Fail,
    Abort,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::Fail => 1,
            RunStatus::Abort => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Pass => "pass",
            RunStatus::Fail => "fail",
            RunStatus::Abort => "abort",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub status: RunStatus,
    pub pass: bool,
    pub t_end: f64,
    pub t_reached: f64,
    pub steps: usize,
    pub elapsed_seconds: f64,
    #[serde(default)]
    pub error: Option<String>,
    pub checks: Vec<CheckResult>,
    #[serde(default)]
    pub smoothing: Option<SmoothingFit>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub dir: PathBuf,
    pub config: ScenarioConfig,
    pub report: RunReport,
    pub ledger: RunLedger,
    pub initial: Field,
    pub final_state: Field,
}

/// Everything built from a config before anything is written.
pub struct Prepared {
    pub config: ScenarioConfig,
    pub grid: Arc<Grid>,
    pub stepper: Stepper,
    pub initial: Field,
    pub dir: PathBuf,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Validates a config value and builds grid, stepper and datum. Relative
/// `from_file` paths resolve against `base_dir`.
pub fn prepare(value: Value, base_dir: Option<&Path>) -> Result<Prepared> {
    let mut config = ScenarioConfig::from_value(value)?;
    if let (InitialDataSpec::FromFile { path, .. }, Some(base)) = (&mut config.initial, base_dir) {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
    let g = &config.grid;
    let grid = make_grid(g.dim, g.half_length, g.n).map_err(config_err)?;
    let solver = config.solver_config()?;
    let stepper = Stepper::new(&grid, &solver).map_err(config_err)?;
    let initial = make_initial(&config.initial, &grid).map_err(config_err)?;
    config.observe_times()?;
    let settings = config.observer.ledger_settings();
    LedgerBuilder::new(&stepper, &settings).map_err(config_err)?;
    if config.checks.exact_linear_tol.is_some() {
        let nl = &config.nonlinearity;
        if !(nl.kind == NonlinearityKind::Power && nl.m == 1.0) {
            return Err(Error::Config("exact_linear_tol needs the linear case (power, m = 1)".into()));
        }
    }
    for &p in &config.observer.p_set {
        if !(p > 1.0) {
            return Err(Error::Config(format!("p-set entries must exceed 1, got {p}")));
        }
    }
    let dir = resolve_output_dir(&config.output.dir);
    Ok(Prepared { config, grid, stepper, initial, dir })
}

/// Closed-form solution `e^{-t(|ξ|²P + δ|ξ|²)} û₀` of the linear problem.
pub fn exact_linear_solution(u0: &Field, stepper: &Stepper, t: f64) -> Result<Field> {
    let grid = u0.grid();
    let lap = SymbolTable::power(grid, 2.0);
    let delta = stepper.config().delta;
    let decay: Vec<f64> = stepper
        .elliptic_symbol()
        .values()
        .iter()
        .zip(lap.values())
        .map(|(e, l)| (-t * (e + delta * l)).exp())
        .collect();
    inverse_transform(&transform(u0).scaled(&decay), grid)
}

fn outside_mass_fraction(u: &Field) -> f64 {
    let g = u.grid();
    let total: f64 = u.values().iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let outside: f64 =
        u.values().iter().enumerate().filter(|(i, _)| g.radius(*i) > 0.5 * g.half_length()).map(|(_, v)| v).sum();
    outside / total
}

fn params(config: &ScenarioConfig) -> Value {
    json!({
        "m": config.nonlinearity.m,
        "mu": config.nonlinearity.mu,
        "kind": config.nonlinearity.kind,
        "s": config.operator.s,
        "epsilon": config.operator.epsilon,
        "delta": config.solver.delta,
    })
}

fn time_label(t: f64) -> String {
    format!("t_{t:.6}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads, runs and writes artifacts for the config at `path`, applying
/// `key=value` overrides first.
pub fn run_scenario(path: &Path, overrides: &[(String, String)]) -> Result<ScenarioOutcome> {
    let mut value = load_config_value(path)?;
    for (k, v) in overrides {
        super::config::apply_override(&mut value, k, v)?;
    }
    run_scenario_value(value, path.parent())
}

pub fn run_scenario_value(value: Value, base_dir: Option<&Path>) -> Result<ScenarioOutcome> {
    let prepared = prepare(value, base_dir)?;
    execute(prepared)
}

/// Runs a prepared scenario. Errors from here on are I/O failures; numerical
/// aborts are reported through [`RunStatus::Abort`] with partial artifacts.
pub fn execute(prepared: Prepared) -> Result<ScenarioOutcome> {
    let Prepared { config, grid: _, stepper, initial, dir } = prepared;
    let start = Instant::now();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_text(&dir.join("config.json"), &serde_json::to_string_pretty(&config)?)?;
    let par = params(&config);
    write_snapshot(&dir.join("initial"), &initial, 0.0, par.clone())?;

    let settings = config.observer.ledger_settings();
    let mut builder = LedgerBuilder::new(&stepper, &settings)?;
    let options = RunOptions {
        cadence: config.observer.cadence,
        observe_times: config.observe_times()?,
        snapshot_times: config.observer.snapshot_times.clone(),
    };
    let outcome = run(&initial, &stepper, &options, &mut builder);
    let ledger = builder.finish();
    write_text(&dir.join("ledger.csv"), &ledger.to_csv_string())?;

    let mut notes = Vec::new();
    let mut checks = Vec::new();
    let mut smoothing = None;
    if !ledger.rows.is_empty() {
        let c = &config.checks;
        checks.push(mass_report(&ledger, c.mass_tol)?);
        checks.push(linf_report(&ledger, c.linf_tol)?);
        for &p in &ledger.p_set {
            checks.push(lp_energy_report(&ledger, p, c.energy_tol)?);
        }
        checks.push(second_energy_report(&ledger, c.energy_tol)?);
        checks.push(first_energy_report(&ledger, c.energy_tol)?);
        if let Some(tol) = c.exact_linear_tol {
            let exact = exact_linear_solution(&initial, &stepper, outcome.t_reached)?;
            let err = outcome.final_state.max_abs_diff(&exact);
            checks.push(CheckResult::new("exact_linear", -err, tol, true).with_detail(format!("linf_error={err}")));
        }
        if let Some(window) = config.observer.smoothing_window {
            match smoothing_fit(&ledger, config.grid.dim, config.operator.s, config.observer.smoothing_p, window) {
                Ok(fit) => smoothing = Some(fit),
                Err(e) => notes.push(format!("smoothing fit skipped: {e}")),
            }
        }
    }
    let outside = outside_mass_fraction(&outcome.final_state);
    if outside > 1e-10 {
        let msg = format!("mass fraction {outside:.3e} lies outside |x| > L/2; the periodic box may be too small");
        log::warn!("{msg}");
        notes.push(msg);
    }

    let final_label = "final";
    write_snapshot(&dir.join(final_label), &outcome.final_state, outcome.t_reached, par.clone())?;
    if config.output.csv_snapshots {
        write_csv(&dir.join("initial.csv"), &initial)?;
        write_csv(&dir.join("final.csv"), &outcome.final_state)?;
    }
    let requested: Vec<f64> = config.observer.snapshot_times.clone();
    if !requested.is_empty() {
        let snap_dir = dir.join("snapshots");
        std::fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
        for t in requested {
            if let Some(f) = outcome.trajectory.at(t) {
                let label = time_label(t);
                write_snapshot(&snap_dir.join(&label), f, t, par.clone())?;
                if config.output.csv_snapshots {
                    write_csv(&snap_dir.join(format!("{label}.csv")), f)?;
                }
            }
        }
    }

    let status = if outcome.error.is_some() {
        RunStatus::Abort
    } else if checks.iter().all(|c| c.pass || !c.asserted) {
        RunStatus::Pass
    } else {
        RunStatus::Fail
    };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        status,
        pass: status == RunStatus::Pass,
        t_end: config.solver.t_end,
        t_reached: outcome.t_reached,
        steps: outcome.trajectory.dt_history.len(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        error: outcome.error.as_ref().map(|e| e.to_string()),
        checks,
        smoothing,
        notes,
    };
    write_text(&dir.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(ScenarioOutcome { dir, config, report, ledger, initial, final_state: outcome.final_state })
}

/// Exit code for an error that prevented a scenario from producing a report.
pub fn error_exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        match err {
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
