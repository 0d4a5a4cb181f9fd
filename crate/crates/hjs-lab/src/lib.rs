//! Scenario runner behind the `hjs-lab` binary.
//!
//! A run reads a [`config`] file, executes one scenario, and leaves
//! `report.json` plus CSV tables in the output directory.

pub mod config;
pub mod output;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use hjs::trajectory::RunMeta;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use config::{parse_config, ConfigError, Scenario, ScenarioConfig, Solver, Tolerances};
pub use scenario::{Check, Outcome};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod exit {
    pub const PASS: u8 = 0;
    pub const TOLERANCE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] hjs::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        use hjs::Error as E;
        match self {
            LabError::Config(_) | LabError::Io { .. } => exit::CONFIG,
            LabError::Sim(E::Config(_) | E::Parameter(_) | E::GridTooSmall { .. } | E::Input(_) | E::Shape { .. }) => {
                exit::CONFIG
            }
            LabError::Sim(_) => exit::NUMERICAL,
        }
    }

    pub fn info(&self) -> ErrorInfo {
        let kind = match self {
            LabError::Config(_) => "config",
            LabError::Io { .. } => "io",
            LabError::Sim(e) if e.is_numerical() => "numerical",
            LabError::Sim(_) if self.exit_code() == exit::CONFIG => "parameter",
            LabError::Sim(_) => "simulation",
        };
        ErrorInfo { kind, message: self.to_string(), exit_code: self.exit_code() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: u8,
}

#[derive(Serialize)]
struct Report<'a> {
    scenario: Option<&'static str>,
    version: &'static str,
    pass: bool,
    exit_code: u8,
    error: Option<&'a ErrorInfo>,
    config: Option<&'a ScenarioConfig>,
    tolerances: Option<&'a Tolerances>,
    checks: &'a [Check],
    runs: &'a [RunMeta],
    details: &'a Value,
}

/// Writes `report.json` for a finished (or failed) scenario and returns the exit code.
pub fn write_report(cfg: &ScenarioConfig, result: &Result<&Outcome, ErrorInfo>) -> Result<u8, LabError> {
    let empty = Outcome::default();
    let (outcome, error) = match result {
        Ok(o) => (*o, None),
        Err(e) => (&empty, Some(e)),
    };
    let pass = error.is_none() && outcome.pass();
    let exit_code = match error {
        Some(e) => e.exit_code,
        None if pass => exit::PASS,
        None => exit::TOLERANCE,
    };
    let report = Report {
        scenario: Some(cfg.scenario.name()),
        version: VERSION,
        pass,
        exit_code,
        error,
        config: Some(cfg),
        tolerances: Some(&cfg.tolerances),
        checks: &outcome.checks,
        runs: &outcome.runs,
        details: &outcome.details,
    };
    output::write_json(&cfg.outdir.join("report.json"), &report)?;
    Ok(exit_code)
}

/// Report for a run that never got a valid configuration.
pub fn write_error_report(dir: &Path, error: &ErrorInfo) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|source| LabError::Io { path: dir.to_path_buf(), source })?;
    let report = Report {
        scenario: None,
        version: VERSION,
        pass: false,
        exit_code: error.exit_code,
        error: Some(error),
        config: None,
        tolerances: None,
        checks: &[],
        runs: &[],
        details: &Value::Null,
    };
    output::write_json(&dir.join("report.json"), &report)
}

/// Runs a scenario into `cfg.outdir`. Returns the exit code with whatever the
/// scenario produced.
pub fn execute(cfg: &ScenarioConfig) -> (u8, Result<Outcome, ErrorInfo>) {
    let dir = &cfg.outdir;
    let result = fs::create_dir_all(dir)
        .map_err(|source| LabError::Io { path: dir.clone(), source })
        .and_then(|_| scenario::run(cfg, dir))
        .map_err(|e| e.info());
    let code = match write_report(cfg, &result.as_ref().map_err(Clone::clone)) {
        Ok(code) => code,
        Err(e) => {
            let info = e.info();
            return (info.exit_code, Err(info));
        }
    };
    (code, result)
}
