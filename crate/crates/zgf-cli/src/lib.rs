//! Configuration-driven runner for the exact checks and Monte Carlo studies.
//!
//! An experiment is described by a TOML file (see [`ExperimentConfig`]); a
//! run writes a JSON report and, for sampled experiments, a CSV of the
//! estimates. Exit status: 0 when every check passes, 1 when one fails,
//! 2 for a configuration error, 3 when a budget is exceeded.

pub mod config;
pub mod experiments;
pub mod report;
pub mod suite;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;
use zgf_exact::{inputs_digest, ExactError};
use zgf_loops::LoopsError;
use zgf_mc::McError;

pub use config::{Budget, ExperimentConfig, ExperimentKind, GraphKind, GraphSpec, Params, PotentialSpec};
pub use experiments::{reference, Outcome};
pub use report::{Check, ExperimentReport, Observable};
pub use suite::{Entry, SuiteName};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        if e.is_budget() {
            CliError::Budget(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            e if e.is_budget() => CliError::Budget(e.to_string()),
            McError::Io(e) => CliError::Io(e.to_string()),
            McError::Csv(e) => CliError::Io(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<LoopsError> for CliError {
    fn from(e: LoopsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<zgf_graph::GraphError> for CliError {
    fn from(e: zgf_graph::GraphError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<zgf_potential::PotentialError> for CliError {
    fn from(e: zgf_potential::PotentialError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Exit status for a finished run.
pub fn status(pass: bool) -> i32 {
    if pass {
        0
    } else {
        1
    }
}

/// Settings that come from the command line rather than the file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Replaces the configured seed.
    pub seed: Option<u64>,
    /// Replaces the configured output directory.
    pub out: Option<PathBuf>,
    /// Reverses every check of this name, of a name extending it by a
    /// `-suffix`, or of this experiment, to show that a broken inequality
    /// is caught.
    pub inject_fault: Option<String>,
}

pub const DEFAULT_OUT: &str = "zgf-out";

/// Runs one experiment and returns its report; nothing is written.
/// `base` is where relative graph files are looked up.
pub fn execute(config: &ExperimentConfig, base: &Path, opts: &RunOptions) -> Result<ExperimentReport, CliError> {
    config.validate()?;
    let seed = opts.seed.or(config.seed).unwrap_or(config::DEFAULT_SEED);
    let resolved = ExperimentConfig { seed: Some(seed), out: None, ..config.clone() };
    let ctx = experiments::Context { config: &resolved, seed, base };
    let mut outcome = experiments::run(&ctx)?;
    if let Some(fault) = &opts.inject_fault {
        inject(&mut outcome.checks, config.experiment, fault);
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    Ok(ExperimentReport {
        experiment: config.experiment.to_string(),
        reference: reference(config.experiment),
        seed,
        config_digest: inputs_digest(&resolved),
        pass,
        checks: outcome.checks,
        observables: outcome.observables,
        data: outcome.data,
        timestamp: report::now(),
    })
}

fn inject(checks: &mut [Check], kind: ExperimentKind, fault: &str) -> usize {
    let mut hit = 0;
    let named = |n: &str| n == fault || n.strip_prefix(fault).is_some_and(|rest| rest.starts_with('-'));
    for c in checks.iter_mut().filter(|c| named(&c.name) || kind.name() == fault) {
        c.invert();
        hit += 1;
    }
    hit
}

/// Whether some experiment could produce a check named `name`; used to
/// refuse fault injections that would silently do nothing.
pub fn known_check(name: &str) -> bool {
    ExperimentKind::ALL.iter().any(|k| k.name() == name) || CHECK_NAMES.contains(&name)
}

const CHECK_NAMES: &[&str] = &[
    "villain-duality",
    "defect-plus",
    "defect-minus",
    "homotopic-paths",
    "stiffness",
    "pythagoras",
    "sublattice",
    "matrix",
    "hessian",
    "correlation",
    "submodularity",
    "equality-correlation",
    "annealed-sublattice",
    "gaussian-domination",
    "gradient-moment",
    "key-bound-exact",
    "key-bound-mc",
    "quadrant-lemma",
    "crossing-count",
    "loops-to-height",
    "subdivision-marginal",
    "step1-variance",
    "step2-variance",
    "step3-variance",
    "max-degree",
    "reduced-coupling",
    "simon-lieb-restricted",
    "simon-lieb-full",
    "gap-decreases",
    "gap-small",
    "grows-at-small-coupling",
    "flat-at-large-coupling",
    "monotone-in-coupling",
    "bernstein",
    "bernstein-rejects",
    "bessel-addition",
    "fourier-positivity",
];

/// Loads, runs and writes one experiment. Returns the report and the files
/// written.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<(ExperimentReport, Vec<PathBuf>), CliError> {
    let config = ExperimentConfig::load(path)?;
    check_fault(opts)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let report = execute(&config, base, opts)?;
    let out = opts.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let files = report.write(&out, config.experiment.name())?;
    Ok((report, files))
}

fn check_fault(opts: &RunOptions) -> Result<(), CliError> {
    match &opts.inject_fault {
        Some(f) if !known_check(f) => Err(CliError::Config(format!("no check or experiment is named `{f}`"))),
        _ => Ok(()),
    }
}

/// One line of the suite table.
#[derive(Clone, Debug)]
pub struct SuiteRow {
    pub entry: Entry,
    pub elapsed: Duration,
    pub result: Result<ExperimentReport, String>,
    /// The report passed and the entry stayed within its time limit.
    pub pass: bool,
    /// Exit status this entry alone would give.
    pub status: i32,
}

impl SuiteRow {
    pub fn line(&self) -> String {
        let label = match self.entry.criterion {
            Some(n) => format!("criterion {n:>2} {:<20}", self.entry.config.experiment.name()),
            None => format!("{:<20}", self.entry.config.experiment.name()),
        };
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let limit = self.entry.limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        let detail = match &self.result {
            Ok(r) => r.summary(),
            Err(e) => e.clone(),
        };
        format!("{label} {verdict}  {:>8.1}s{limit}  {detail}", self.elapsed.as_secs_f64())
    }
}

/// Runs one suite entry and, if `out` is given, writes its report there.
pub fn run_entry(entry: &Entry, opts: &RunOptions, out: Option<&Path>) -> SuiteRow {
    let start = Instant::now();
    let result = execute(&entry.config, Path::new("."), opts);
    let elapsed = start.elapsed();
    let in_time = entry.limit.is_none_or(|l| elapsed <= l);
    let (result, pass, status) = match result {
        Ok(r) => {
            let written = out.map_or(Ok(Vec::new()), |dir| r.write(dir, &entry.stem()));
            match written {
                Ok(_) => {
                    let pass = r.pass && in_time;
                    (Ok(r), pass, status(pass))
                }
                Err(e) => (Err(e.to_string()), false, e.exit_code()),
            }
        }
        Err(e) => (Err(e.to_string()), false, e.exit_code()),
    };
    SuiteRow { entry: entry.clone(), elapsed, result, pass, status }
}

/// Runs a battery in order, printing each line as it finishes. The status
/// is the largest of the members' statuses.
pub fn run_suite(name: SuiteName, opts: &RunOptions, out: &Path) -> Result<(Vec<SuiteRow>, i32), CliError> {
    check_fault(opts)?;
    let mut rows = Vec::new();
    for entry in suite::entries(name) {
        let row = run_entry(&entry, opts, Some(out));
        println!("{}", row.line());
        rows.push(row);
    }
    let status = rows.iter().map(|r| r.status).max().unwrap_or(0);
    Ok((rows, status))
}
