//! Configured scenarios, parameter sweeps and consolidated reports.

mod config;
mod initial;
mod report;
mod scenario;
mod sweep;

pub use config::{
    apply_override, get_path, load_config_value, parse_config_text, resolve_output_dir, set_path, split_override,
    ChecksSection, GridSection, LogTimes, ObserverSection, OperatorSection, OutputSection, ScenarioConfig,
    SolverSection, SCHEMA_VERSION,
};
pub use initial::{make_initial, InitialDataSpec, Noise};
pub use report::{emit_report, ReportEntry, ReportSummary};
pub use scenario::{
    error_exit_code, exact_linear_solution, execute, prepare, run_scenario, run_scenario_value, Prepared, RunReport,
    RunStatus, ScenarioOutcome,
};
pub use sweep::{load_sweep, run_sweep, run_sweep_file, run_sweep_text, SweepRow, SweepSpec, SweepSummary};
