use std::path::{Path, PathBuf};
use std::process::Command;

fn nlpme() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlpme"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

const SMALL: &str = r#"
schema_version = 1
grid = { dim = 1, L = 8.0, n = 64 }
operator = { s = 0.5 }
nonlinearity = { kind = "power", m = 2.0 }
solver = { t_end = 0.1 }
initial = { kind = "gaussian", mass = 1.0, sigma = 1.0 }
observer = { cadence = 0.05 }
output = { dir = "small" }
"#;

#[test]
fn run_writes_artifacts_under_nlpme_out() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = nlpme().arg("run").arg("--config").arg(&cfg).env("NLPME_OUT", tmp.path().join("root")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("root/small");
    assert!(dir.join("ledger.csv").is_file() && dir.join("report.json").is_file());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS mass_conservation"));
}

#[test]
fn override_changes_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = nlpme()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--override", "nonlinearity.m=3", "--override", "output.dir=m3"])
        .env("NLPME_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("m3/config.json")).unwrap()).unwrap();
    assert_eq!(stored["nonlinearity"]["m"], serde_json::json!(3.0));
}

#[test]
fn config_errors_exit_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("n = 64", "n = 64, typo = 1")).unwrap();
    let out = nlpme().arg("run").arg("--config").arg(&cfg).env("NLPME_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("small").exists());
    let missing = nlpme().args(["run", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let bad_override = nlpme().arg("run").arg("--config").arg(&cfg).args(["--override", "noequals"]).output().unwrap();
    assert_eq!(bad_override.status.code(), Some(2));
}

#[test]
fn numerical_abort_exits_3_with_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("abort.toml");
    // two Picard iterations cannot reach tol = 1e-14
    let text = SMALL.replace("solver = { t_end = 0.1 }", "solver = { t_end = 0.1, scheme = \"duhamel\", delta = 0.1, duhamel = { window = 0.05, tol = 1e-14, max_iter = 2, nodes = 8 } }")
        .replace("operator = { s = 0.5 }", "operator = { s = 0.5, epsilon = 0.25 }");
    std::fs::write(&cfg, text).unwrap();
    let out = nlpme().arg("run").arg("--config").arg(&cfg).env("NLPME_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("small/report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "abort");
    assert!(tmp.path().join("small/ledger.csv").is_file());
}

#[test]
fn fractional_heat_preset_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nlpme().arg("run").arg("--config").arg(preset("fractional_heat.toml")).env("NLPME_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS exact_linear"));
}

#[test]
fn figure_preset_produces_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nlpme().arg("run").arg("--config").arg(preset("figure1_m2_s05.toml")).env("NLPME_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let dir = tmp.path().join("figure1_m2_s05");
    for t in ["0.250000", "0.500000", "1.000000", "2.000000"] {
        assert!(dir.join(format!("snapshots/t_{t}.csv")).is_file());
    }
    let csv = std::fs::read_to_string(dir.join("snapshots/t_1.000000.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,u"));
    assert_eq!(csv.lines().count(), 513);
}

#[test]
fn sweep_and_report_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let base = tmp.path().join("base.toml");
    std::fs::write(&base, SMALL.replace("t_end = 0.1", "t_end = 0.05")).unwrap();
    let spec = tmp.path().join("sweep.toml");
    std::fs::write(
        &spec,
        "base = \"base.toml\"\noutput_dir = \"sw\"\n[axes]\n\"nonlinearity.m\" = [1.5, 2.5]\n\"operator.s\" = [0.25, 0.75]\n",
    )
    .unwrap();
    let out = nlpme().arg("sweep").arg("--spec").arg(&spec).args(["--jobs", "2"]).env("NLPME_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(tmp.path().join("sw/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);

    let rep = nlpme().arg("report").arg(tmp.path().join("sw")).output().unwrap();
    assert_eq!(rep.status.code(), Some(0));
    assert!(tmp.path().join("sw/report_summary.json").is_file());
    let empty = tempfile::tempdir().unwrap();
    let rep = nlpme().arg("report").arg(empty.path()).output().unwrap();
    assert_eq!(rep.status.code(), Some(0));
}

#[test]
fn check_ops_prints_every_check() {
    let tmp = tempfile::tempdir().unwrap();
    let json = tmp.path().join("ops.json");
    let out = nlpme().arg("check-ops").arg("--json").arg(&json).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eigen_frac_laplacian_1d"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let pass = report["pass"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if pass { 0 } else { 1 }));
}
