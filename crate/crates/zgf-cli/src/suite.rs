//! The predeclared batteries. `full` has one entry per acceptance
//! criterion with its runtime limit; `smoke` keeps to exact enumeration
//! on reduced instance counts and finishes in well under a minute.

use std::str::FromStr;
use std::time::Duration;

use crate::config::{ExperimentConfig, ExperimentKind, GraphSpec, Params};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteName {
    Smoke,
    Full,
}

impl FromStr for SuiteName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smoke" => Ok(SuiteName::Smoke),
            "full" => Ok(SuiteName::Full),
            other => Err(format!("unknown suite `{other}` (expected smoke or full)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    /// Acceptance criterion number, for the full battery.
    pub criterion: Option<usize>,
    pub config: ExperimentConfig,
    /// Wall-clock limit; exceeding it fails the entry.
    pub limit: Option<Duration>,
}

impl Entry {
    /// File stem of the entry's report.
    pub fn stem(&self) -> String {
        match self.criterion {
            Some(n) => format!("criterion-{n:02}-{}", self.config.experiment),
            None => self.config.experiment.to_string(),
        }
    }
}

fn config(kind: ExperimentKind, params: Params) -> ExperimentConfig {
    ExperimentConfig { params, ..ExperimentConfig::new(kind) }
}

const MINUTE: u64 = 60;

/// The acceptance battery: every experiment at its defaults.
pub fn full() -> Vec<Entry> {
    let limits = [
        (ExperimentKind::Duality, MINUTE),
        (ExperimentKind::CorrelationDuality, 2 * MINUTE),
        (ExperimentKind::Stiffness, 5 * MINUTE),
        (ExperimentKind::Rsd, 10 * MINUTE),
        (ExperimentKind::KeyBound, 15 * MINUTE),
        (ExperimentKind::Loops, 10 * MINUTE),
        (ExperimentKind::GaussianDomination, 2 * MINUTE),
        (ExperimentKind::Surgery, 5 * MINUTE),
        (ExperimentKind::SimonLieb, 5 * MINUTE),
        (ExperimentKind::MetricXy, 10 * MINUTE),
        (ExperimentKind::Depinning, 20 * MINUTE),
        (ExperimentKind::Bernstein, MINUTE),
    ];
    limits
        .iter()
        .enumerate()
        .map(|(i, &(kind, secs))| Entry {
            criterion: Some(i + 1),
            config: ExperimentConfig::new(kind),
            limit: Some(Duration::from_secs(secs)),
        })
        .collect()
}

/// Exact checks only, at reduced instance counts.
pub fn smoke() -> Vec<Entry> {
    let few = |n| Params { instances: Some(n), ..Params::default() };
    let entries = vec![
        config(ExperimentKind::Duality, Params::default()),
        config(ExperimentKind::CorrelationDuality, Params { beta: Some(vec![1.0]), ..Params::default() }),
        config(ExperimentKind::Stiffness, few(10)),
        config(ExperimentKind::Rsd, Params { instances: Some(10), annealed_instances: Some(4), ..Params::default() }),
        config(ExperimentKind::GaussianDomination, few(4)),
        ExperimentConfig {
            graphs: vec![GraphSpec::square(1)],
            ..config(ExperimentKind::Surgery, Params::default())
        },
        config(ExperimentKind::SimonLieb, Params::default()),
        config(ExperimentKind::Bernstein, Params::default()),
    ];
    entries.into_iter().map(|config| Entry { criterion: None, config, limit: None }).collect()
}

pub fn entries(name: SuiteName) -> Vec<Entry> {
    match name {
        SuiteName::Smoke => smoke(),
        SuiteName::Full => full(),
    }
}
