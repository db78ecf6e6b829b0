//! Cartesian parameter sweeps executed on a bounded worker pool.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{get_path, load_config_value, parse_config_text, resolve_output_dir, set_path};
use super::scenario::{prepare, execute, ScenarioOutcome};
use crate::diagnostics::{delta_theory, fit_mass_exponent, gamma_theory, lp_norm};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Inline scenario table, or a path to one relative to the sweep file.
    pub base: Value,
    pub axes: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub jobs: Option<usize>,
    pub output_dir: String,
    /// Axis whose last value is the reference for `l2_to_last`; defaults to the last axis.
    #[serde(default)]
    pub chain_axis: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub run_id: String,
    pub status: String,
    pub m: f64,
    pub s: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub mass: f64,
    pub gamma_hat: Option<f64>,
    pub gamma_theory: f64,
    pub delta_hat: Option<f64>,
    pub delta_theory: f64,
    pub support_radius: Option<f64>,
    pub tail_min: Option<f64>,
    pub all_pass: bool,
    pub l2_to_last: Option<f64>,
    #[serde(skip)]
    pub assignment: Vec<Value>,
    #[serde(skip)]
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepSummary {
    pub dir: PathBuf,
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.all_pass)
    }

    pub fn header() -> &'static str {
        "run_id,status,m,s,epsilon,delta,mu,mass,gamma_hat,gamma_theory,delta_hat,delta_theory,support_radius,tail_min,all_pass,l2_to_last"
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut out = String::from(Self::header());
        out.push('\n');
        for r in &self.rows {
            let cells = [
                r.run_id.clone(),
                r.status.clone(),
                format!("{}", r.m),
                format!("{}", r.s),
                format!("{}", r.epsilon),
                format!("{}", r.delta),
                format!("{}", r.mu),
                format!("{}", r.mass),
                opt(r.gamma_hat),
                format!("{}", r.gamma_theory),
                opt(r.delta_hat),
                format!("{}", r.delta_theory),
                opt(r.support_radius),
                opt(r.tail_min),
                format!("{}", r.all_pass),
                opt(r.l2_to_last),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn load_sweep(path: &Path) -> Result<(SweepSpec, Value)> {
    let value = load_config_value(path)?;
    let spec: SweepSpec = serde_json::from_value(value).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
    let base = match &spec.base {
        Value::String(p) => {
            let p = PathBuf::from(p);
            let full = if p.is_relative() { path.parent().unwrap_or(Path::new(".")).join(p) } else { p };
            load_config_value(&full)?
        }
        Value::Object(_) => spec.base.clone(),
        _ => return Err(Error::Config("sweep base must be a table or a path".into())),
    };
    Ok((spec, base))
}

/// Every combination of axis values, last axis varying fastest.
fn grid_points(axes: &BTreeMap<String, Vec<Value>>) -> Vec<Vec<Value>> {
    let mut points = vec![Vec::new()];
    for values in axes.values() {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    points
}

fn num(v: &Value, key: &str) -> f64 {
    get_path(v, key).and_then(Value::as_f64).unwrap_or(0.0)
}

type RunResult = (usize, Vec<Value>, Value, std::result::Result<ScenarioOutcome, Error>);

pub fn run_sweep_file(path: &Path, jobs: Option<usize>) -> Result<SweepSummary> {
    let (spec, base) = load_sweep(path)?;
    run_sweep(&spec, base, path.parent(), jobs)
}

pub fn run_sweep_text(text: &str, json: bool, base_dir: Option<&Path>, jobs: Option<usize>) -> Result<SweepSummary> {
    let spec: SweepSpec =
        serde_json::from_value(parse_config_text(text, json)?).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
    let base = match &spec.base {
        Value::Object(_) => spec.base.clone(),
        _ => return Err(Error::Config("inline sweep needs a base table".into())),
    };
    run_sweep(&spec, base, base_dir, jobs)
}

/// Runs one scenario per axis combination. Individual failures are recorded
/// and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, base: Value, base_dir: Option<&Path>, jobs: Option<usize>) -> Result<SweepSummary> {
    if spec.axes.is_empty() || spec.axes.values().any(|v| v.is_empty()) {
        return Err(Error::Config("sweep needs at least one nonempty axis".into()));
    }
    let axes: Vec<String> = spec.axes.keys().cloned().collect();
    let chain = spec.chain_axis.clone().unwrap_or_else(|| axes[axes.len() - 1].clone());
    let chain_idx = axes
        .iter()
        .position(|a| *a == chain)
        .ok_or_else(|| Error::Config(format!("chain_axis '{chain}' is not an axis")))?;
    let root = resolve_output_dir(&spec.output_dir);
    let points = grid_points(&spec.axes);

    let mut prepared = Vec::with_capacity(points.len());
    for (k, point) in points.iter().enumerate() {
        let mut v = base.clone();
        for (key, val) in axes.iter().zip(point) {
            set_path(&mut v, key, val.clone())?;
        }
        let dir = root.join(format!("run_{k:04}"));
        set_path(&mut v, "output.dir", Value::String(dir.to_string_lossy().into_owned()))?;
        prepared.push((k, point.clone(), v));
    }

    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let jobs = jobs.or(spec.jobs).unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<RunResult> = pool.install(|| {
        prepared
            .into_par_iter()
            .map(|(k, point, v)| {
                let out = prepare(v.clone(), base_dir).and_then(execute);
                (k, point, v, out)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(results.len());
    let mut finals = Vec::with_capacity(results.len());
    for (k, point, v, out) in &results {
        let dim = num(v, "grid.dim").max(1.0) as usize;
        let (m, s) = (num(v, "nonlinearity.m"), num(v, "operator.s"));
        let p = get_path(v, "observer.smoothing_p").and_then(Value::as_f64).unwrap_or(1.0);
        let mut row = SweepRow {
            run_id: format!("run_{k:04}"),
            status: "error".into(),
            m,
            s,
            epsilon: num(v, "operator.epsilon"),
            delta: num(v, "solver.delta"),
            mu: num(v, "nonlinearity.mu"),
            mass: f64::NAN,
            gamma_hat: None,
            gamma_theory: gamma_theory(dim, m, s, p),
            delta_hat: None,
            delta_theory: delta_theory(dim, m, s, p),
            support_radius: None,
            tail_min: None,
            all_pass: false,
            l2_to_last: None,
            assignment: point.clone(),
            error: None,
        };
        match out {
            Ok(o) => {
                row.status = o.report.status.as_str().into();
                row.all_pass = o.report.pass;
                row.mass = crate::diagnostics::mass(&o.initial);
                row.gamma_hat = o.report.smoothing.as_ref().map(|f| f.gamma_hat);
                if let Some(last) = o.ledger.rows.last() {
                    row.support_radius = Some(last.support_radius);
                    row.tail_min = Some(last.tail_min);
                }
                finals.push(Some((o.final_state.clone(), lp_norm(&o.initial, p), o.final_state.max())));
            }
            Err(e) => {
                log::warn!("sweep run_{k:04} failed: {e}");
                row.error = Some(e.to_string());
                finals.push(None);
            }
        }
        rows.push(row);
    }

    // distances to the last value of the chain axis, other axes fixed
    let last_chain = spec.axes[&chain].last().cloned();
    for i in 0..rows.len() {
        let reference = (0..rows.len()).find(|&j| {
            rows[j].assignment.iter().enumerate().all(|(a, v)| {
                if a == chain_idx {
                    Some(v) == last_chain.as_ref()
                } else {
                    *v == rows[i].assignment[a]
                }
            })
        });
        if let (Some(j), Some((fi, _, _))) = (reference, &finals[i]) {
            if let Some((fj, _, _)) = &finals[j] {
                if **fi.grid() == **fj.grid() {
                    rows[i].l2_to_last = Some(fi.l2_distance(fj));
                }
            }
        }
    }

    // mass exponent across the initial.mass axis, other axes fixed
    if let Some(mass_idx) = axes.iter().position(|a| a == "initial.mass") {
        for i in 0..rows.len() {
            let group: Vec<usize> = (0..rows.len())
                .filter(|&j| {
                    rows[j].assignment.iter().enumerate().all(|(a, v)| a == mass_idx || *v == rows[i].assignment[a])
                })
                .collect();
            let (norms, linf): (Vec<f64>, Vec<f64>) =
                group.iter().filter_map(|&j| finals[j].as_ref().map(|(_, n, l)| (*n, *l))).unzip();
            if let Ok(fit) = fit_mass_exponent(&norms, &linf) {
                rows[i].delta_hat = Some(fit.slope);
            }
        }
    }

    let summary = SweepSummary { dir: root.clone(), axes, rows };
    let path = root.join("summary.csv");
    std::fs::write(&path, summary.to_csv()).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
