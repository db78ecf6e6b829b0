//! Consolidates the reports found under an artifact directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SCHEMA_VERSION;
use super::scenario::RunReport;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    /// Run directory relative to the scanned root.
    pub path: String,
    pub status: String,
    pub pass: bool,
    pub failed_checks: Vec<String>,
    pub report: RunReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub schema_version: u32,
    pub status: String,
    pub pass: bool,
    pub runs: Vec<ReportEntry>,
    /// Run directories whose `report.json` is missing or unreadable.
    pub missing: Vec<String>,
}

impl ReportSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,status,pass,checks,failed_checks\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.path,
                r.status,
                r.pass,
                r.report.checks.len(),
                r.failed_checks.join(";")
            ));
        }
        for m in &self.missing {
            out.push_str(&format!("{m},missing,false,0,\n"));
        }
        out
    }
}

fn run_dirs(root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if root.join("config.json").is_file() {
        out.push(root.to_path_buf());
    }
    let mut children: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    children.sort();
    for c in &children {
        run_dirs(c.as_path(), out)?;
    }
    Ok(())
}

fn relative(root: &Path, p: &Path) -> String {
    let r = p.strip_prefix(root).unwrap_or(p);
    let s = r.to_string_lossy().replace('\\', "/");
    if s.is_empty() {
        ".".into()
    } else {
        s
    }
}

/// Scans `root` for run directories and writes `report_summary.json` and
/// `report_summary.csv` into it.
pub fn emit_report(root: &Path) -> Result<ReportSummary> {
    if !root.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", root.display())));
    }
    let mut dirs = Vec::new();
    run_dirs(root, &mut dirs)?;
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    for d in &dirs {
        let path = d.join("report.json");
        let parsed = std::fs::read_to_string(&path)
            .ok()
            .and_then(|t| serde_json::from_str::<RunReport>(&t).ok());
        match parsed {
            Some(report) => {
                let failed_checks =
                    report.checks.iter().filter(|c| c.asserted && !c.pass).map(|c| c.name.clone()).collect();
                runs.push(ReportEntry {
                    path: relative(root, d),
                    status: report.status.as_str().into(),
                    pass: report.pass,
                    failed_checks,
                    report,
                });
            }
            None => missing.push(relative(root, d)),
        }
    }
    let pass = missing.is_empty() && runs.iter().all(|r| r.pass);
    let summary = ReportSummary {
        schema_version: SCHEMA_VERSION,
        status: if pass { "pass" } else { "fail" }.into(),
        pass,
        runs,
        missing,
    };
    let json_path = root.join("report_summary.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&json_path, e))?;
    let csv_path = root.join("report_summary.csv");
    std::fs::write(&csv_path, summary.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    Ok(summary)
}
