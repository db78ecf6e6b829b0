//! Scenario configuration: TOML or JSON, dotted overrides, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::initial::InitialDataSpec;
use crate::diagnostics::LedgerSettings;
use crate::error::{Error, Result};
use crate::fracops::SymbolMode;
use crate::nonlinearity::NonlinearitySpec;
use crate::stepper::{DuhamelSettings, Scheme, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub s: f64,
    #[serde(default)]
    pub epsilon: f64,
    /// Defaults to `exact_symbol` for `epsilon = 0` and `regularized_symbol` otherwise.
    #[serde(default)]
    pub mode: Option<SymbolMode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub t_end: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub positivity_floor: f64,
    #[serde(default)]
    pub duhamel: DuhamelSettings,
}

fn default_cfl() -> f64 {
    0.5
}
fn default_dt_max() -> f64 {
    1e-2
}
fn default_scheme() -> Scheme {
    Scheme::ExplicitUpwind
}

/// Logarithmically spaced observation times `start · (t_end/start)^{k/(count-1)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogTimes {
    pub start: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default)]
    pub cadence: Option<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub log_times: Option<LogTimes>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_p_set")]
    pub p_set: Vec<f64>,
    #[serde(default)]
    pub support_threshold: Option<f64>,
    #[serde(default)]
    pub tail_r0: Option<f64>,
    #[serde(default = "default_floor")]
    pub first_energy_floor: f64,
    /// Window for the `‖u‖∞ ~ t^{-γ}` fit; no fit when absent.
    #[serde(default)]
    pub smoothing_window: Option<(f64, f64)>,
    #[serde(default = "default_smoothing_p")]
    pub smoothing_p: f64,
}

fn default_smoothing_p() -> f64 {
    1.0
}
fn default_p_set() -> Vec<f64> {
    LedgerSettings::default().p_set
}
fn default_floor() -> f64 {
    LedgerSettings::default().first_energy_floor
}

impl ObserverSection {
    pub fn ledger_settings(&self) -> LedgerSettings {
        LedgerSettings {
            p_set: self.p_set.clone(),
            support_threshold: self.support_threshold,
            tail_r0: self.tail_r0,
            first_energy_floor: self.first_energy_floor,
        }
    }
}

impl Default for ObserverSection {
    fn default() -> Self {
        ObserverSection {
            cadence: None,
            times: Vec::new(),
            log_times: None,
            snapshot_times: Vec::new(),
            p_set: default_p_set(),
            support_threshold: None,
            tail_r0: None,
            first_energy_floor: default_floor(),
            smoothing_window: None,
            smoothing_p: default_smoothing_p(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths resolve against `NLPME_OUT` when it is set.
    pub dir: String,
    #[serde(default)]
    pub csv_snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), csv_snapshots: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default = "default_identity_tol")]
    pub mass_tol: f64,
    #[serde(default = "default_identity_tol")]
    pub linf_tol: f64,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    /// Compare against the exact linear solution with this `L∞` tolerance.
    #[serde(default)]
    pub exact_linear_tol: Option<f64>,
}

fn default_identity_tol() -> f64 {
    1e-10
}
fn default_energy_tol() -> f64 {
    1e-2
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            mass_tol: default_identity_tol(),
            linf_tol: default_identity_tol(),
            energy_tol: default_energy_tol(),
            exact_linear_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub grid: GridSection,
    pub operator: OperatorSection,
    pub nonlinearity: NonlinearitySpec,
    pub solver: SolverSection,
    pub initial: InitialDataSpec,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

impl ScenarioConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let op = &self.operator;
        let mode = op.mode.unwrap_or(if op.epsilon > 0.0 { SymbolMode::RegularizedSymbol } else { SymbolMode::ExactSymbol });
        let sv = &self.solver;
        let cfg = SolverConfig {
            s: op.s,
            epsilon: op.epsilon,
            mode,
            delta: sv.delta,
            nonlinearity: self.nonlinearity,
            t_end: sv.t_end,
            cfl_safety: sv.cfl_safety,
            dt_max: sv.dt_max,
            scheme: sv.scheme,
            positivity_floor: sv.positivity_floor,
            duhamel: sv.duhamel,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Observation times strictly inside `(0, t_end)` requested explicitly or by `log_times`.
    pub fn observe_times(&self) -> Result<Vec<f64>> {
        let mut out = self.observer.times.clone();
        if let Some(lt) = &self.observer.log_times {
            let t_end = self.solver.t_end;
            if !(lt.start > 0.0 && lt.start < t_end && lt.count >= 2) {
                return Err(Error::Config("log_times needs 0 < start < t_end and count >= 2".into()));
            }
            let ratio = t_end / lt.start;
            out.extend((0..lt.count).map(|k| lt.start * ratio.powf(k as f64 / (lt.count - 1) as f64)));
        }
        Ok(out)
    }
}

/// Parses TOML, or JSON when the path ends in `.json`.
pub fn parse_config_text(text: &str, json: bool) -> Result<Value> {
    if json {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))
    } else {
        let t: toml::Value = toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
        serde_json::to_value(t).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn load_config_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let json = path.extension().and_then(|e| e.to_str()) == Some("json");
    parse_config_text(&text, json)
}

/// Sets `key.path = raw`; `raw` is read as JSON when possible, otherwise as a string.
pub fn apply_override(value: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(value, key, parsed)
}

pub fn set_path(value: &mut Value, key: &str, new: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let mut cur = value;
    for part in &parts[..parts.len() - 1] {
        let obj = cur.as_object_mut().ok_or_else(|| Error::Config(format!("'{key}' does not address a table")))?;
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = cur.as_object_mut().ok_or_else(|| Error::Config(format!("'{key}' does not address a table")))?;
    obj.insert(parts[parts.len() - 1].to_string(), new);
    Ok(())
}

pub fn get_path<'a>(value: &'a Value, key: &str) -> Option<&'a Value> {
    key.split('.').try_fold(value, |v, k| v.get(k))
}

/// Parses `key=value` into its halves.
pub fn split_override(arg: &str) -> Result<(&str, &str)> {
    arg.split_once('=').ok_or_else(|| Error::Config(format!("override '{arg}' is not of the form key=value")))
}

pub fn resolve_output_dir(dir: &str) -> PathBuf {
    let p = PathBuf::from(dir);
    if p.is_absolute() {
        return p;
    }
    match std::env::var_os("NLPME_OUT") {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(p),
        _ => p,
    }
}
