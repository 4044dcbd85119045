//! Run reports and their on-disk form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Scenario, ScenarioError, FORMAT_VERSION};
use crate::certificate::{Mode, TheoremCertificate};
use crate::solver::ConvergenceLog;
use crate::verification::{ContractionReport, PropagationReport, RadiusViolation, ResidualReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    ConfigError,
    GateFailure,
    ConvergenceFailure,
    VerificationFailure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ConfigError => 1,
            ExitStatus::GateFailure => 2,
            ExitStatus::ConvergenceFailure => 3,
            ExitStatus::VerificationFailure => 4,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        Some(match code {
            0 => ExitStatus::Success,
            1 => ExitStatus::ConfigError,
            2 => ExitStatus::GateFailure,
            3 => ExitStatus::ConvergenceFailure,
            4 => ExitStatus::VerificationFailure,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub command: String,
    pub scenario: String,
    pub fingerprint: String,
    pub seed: u64,
    pub mode: Mode,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub certificate: Option<TheoremCertificate>,
    pub convergence: Option<ConvergenceLog>,
    pub residuals: Vec<ResidualReport>,
    pub propagation: Option<PropagationReport>,
    pub contraction: Option<ContractionReport>,
    pub radius_violations: Vec<RadiusViolation>,
    pub messages: Vec<String>,
    pub config: Scenario,
    /// SHA-256 of this report with `content_hash` and `timings` blanked.
    pub content_hash: String,
    /// Wall-clock seconds per phase; not part of `content_hash`.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, config: &Scenario, fingerprint: &str, mode: Mode) -> Self {
        RunReport {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            scenario: config.name.clone(),
            fingerprint: fingerprint.to_string(),
            seed: config.seed,
            mode,
            status: ExitStatus::Success,
            exit_code: 0,
            certificate: None,
            convergence: None,
            residuals: Vec::new(),
            propagation: None,
            contraction: None,
            radius_violations: Vec::new(),
            messages: Vec::new(),
            config: config.clone(),
            content_hash: String::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Raises the status; the worst status wins.
    pub fn fail(&mut self, status: ExitStatus, message: impl Into<String>) {
        self.status = self.status.max(status);
        self.exit_code = self.status.code();
        self.messages.push(message.into());
    }

    /// Hash of the report without timings or the output location.
    pub fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.content_hash.clear();
        copy.timings.clear();
        copy.config.output = None;
        let bytes = serde_json::to_vec(&copy).expect("report serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn seal(&mut self) {
        self.content_hash = self.compute_hash();
    }

    pub fn max_residual(&self) -> Option<f64> {
        self.residuals
            .iter()
            .filter(|r| r.check != "decay")
            .map(|r| r.max_value)
            .reduce(f64::max)
    }
}

/// Pretty JSON with a trailing newline. Struct fields keep declaration
/// order and maps are sorted, so output is stable.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScenarioError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ScenarioError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ScenarioError::io(path, e))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ScenarioError::io(path, e))?;
    w.write_record(header)
        .map_err(|e| ScenarioError::io(path, e))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| ScenarioError::io(path, e))?;
    }
    w.flush().map_err(|e| ScenarioError::io(path, e))
}
