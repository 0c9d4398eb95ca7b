//! What an experiment leaves behind: a JSON report with one row per check,
//! and for sampled experiments a CSV of the estimates.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use zgf_exact::CheckReport;
use zgf_mc::{write_observables, Estimate, ObservableRow};

use crate::CliError;

/// One verified statement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// What the check was run on, in a few words.
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Non-negative when the statement holds.
    pub slack: f64,
    pub tolerance: f64,
    pub tail: f64,
    pub pass: bool,
}

impl Check {
    pub fn from_report(instance: impl Into<String>, r: &CheckReport) -> Self {
        Check {
            name: r.check_name.clone(),
            instance: instance.into(),
            lhs: r.lhs,
            rhs: r.rhs,
            slack: r.slack,
            tolerance: r.tolerance,
            tail: r.tail_estimate,
            pass: r.pass,
        }
    }

    /// A yes/no statement with nothing to compare.
    pub fn flag(name: &str, instance: impl Into<String>, pass: bool) -> Self {
        let v = f64::from(u8::from(pass));
        Check { name: name.into(), instance: instance.into(), lhs: v, rhs: 1.0, slack: v - 1.0, tolerance: 0.0, tail: 0.0, pass }
    }

    /// `lhs ≤ rhs + tolerance`.
    pub fn le(name: &str, instance: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        Check { name: name.into(), instance: instance.into(), lhs, rhs, slack, tolerance, tail: 0.0, pass: slack >= -tolerance }
    }

    /// Reverses the inequality and demands it beyond the tolerance, so a
    /// check that held now fails: what a broken build would report.
    pub fn invert(&mut self) {
        self.slack = -self.slack;
        self.pass = self.slack > self.tolerance;
    }
}

/// An estimate that went into a check, for the CSV and the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub name: String,
    pub estimate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// The statements the experiment checks.
    pub reference: Vec<String>,
    pub seed: u64,
    /// Digest of the resolved configuration.
    pub config_digest: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<Observable>,
    /// Experiment-specific tables.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
    /// Seconds since the Unix epoch when the report was written; the only
    /// field that differs between two runs of the same configuration.
    pub timestamp: u64,
}

impl ExperimentReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn summary(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        format!("{} checks, {failed} failed", self.checks.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Writes `<dir>/<stem>.json`, and `<dir>/<stem>.csv` when there are
    /// observables. Returns the paths written.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json() + "\n").map_err(|e| CliError::Io(format!("{}: {e}", json.display())))?;
        let mut out = vec![json];
        if !self.observables.is_empty() {
            let csv = dir.join(format!("{stem}.csv"));
            write_observables(&csv, &observable_rows(&self.observables))
                .map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
            out.push(csv);
        }
        Ok(out)
    }
}

/// Two rows per estimate, `<name>` with the mean and `<name>.sigma` with
/// its standard error; `sweep` holds the number of samples behind it.
pub fn observable_rows(obs: &[Observable]) -> Vec<ObservableRow> {
    obs.iter()
        .flat_map(|o| {
            [
                ObservableRow { sweep: o.estimate.samples, observable: o.name.clone(), value: o.estimate.mean },
                ObservableRow { sweep: o.estimate.samples, observable: format!("{}.sigma", o.name), value: o.estimate.sigma },
            ]
        })
        .collect()
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
