//! Command-line driver for the holonomic quantum-dot gate library: strict
//! JSON configuration, experiment runners, CSV/JSON artefacts and the
//! `verify-all` suite.

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;
pub mod verify;

use std::fs;
use std::io;
use std::path::Path;

use config::{ConfigIssue, Experiment, ExperimentConfig};
use experiments::{Outcome, RunError};
use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_ECHO_FILE: &str = "config.json";

fn dispatch(config: &ExperimentConfig, dir: &Path) -> Result<Outcome, RunError> {
    match &config.experiment {
        Experiment::SingleGate(p) => experiments::single_gate(p, dir),
        Experiment::Compose(p) => experiments::compose(p, dir),
        Experiment::TwoQubit(p) => experiments::two_qubit(p, dir),
        Experiment::ConcurrenceSweep(p) => experiments::concurrence_sweep(p, dir),
        Experiment::FidelityCurve(p) => experiments::fidelity_curves(p, dir),
        Experiment::VerifyAll(p) => Ok(Outcome {
            checks: verify::verify_all(p, config.seed)?,
            artifacts: Vec::new(),
        }),
    }
}

/// Runs an experiment, writing its artefacts, the effective configuration
/// and `report.json` into the output directory. Numerical failures are
/// recorded in the report; only I/O errors are returned.
pub fn run_experiment(config: &ExperimentConfig) -> io::Result<Report> {
    let dir = config.output_dir();
    fs::create_dir_all(&dir)?;
    output::write_json(&dir.join(CONFIG_ECHO_FILE), &config.effective())?;
    let mut report = Report::new(config.experiment.kind(), config.seed);
    match dispatch(config, &dir) {
        Ok(outcome) => {
            report.checks = outcome.checks;
            report.artifacts = outcome.artifacts;
        }
        Err(RunError::Numerical(e)) => report.failure = Some(e.to_string()),
        Err(RunError::Io(e)) => return Err(e),
    }
    report.artifacts.push(CONFIG_ECHO_FILE.into());
    report.artifacts.push(REPORT_FILE.into());
    report.finish();
    output::write_json(&dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

/// Reads and parses a configuration file; unreadable files become a single
/// document-level issue.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let text = fs::read_to_string(path).map_err(|e| {
        vec![ConfigIssue {
            key: String::new(),
            line: None,
            column: None,
            message: format!("cannot read {}: {e}", path.display()),
        }]
    })?;
    config::parse_config(&text)
}

/// Exit code for a finished run.
pub fn exit_code(report: &Report) -> i32 {
    if report.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
