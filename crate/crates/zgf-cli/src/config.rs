//! The experiment file: TOML, versioned, and closed to unknown keys.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zgf_graph::{build_square_lattice, from_json, path_graph, star_graph, PlanarGraph, Vertex};
use zgf_potential::{Potential, PotentialKind};

use crate::CliError;

/// The only schema version this build reads.
pub const SCHEMA: u32 = 1;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Duality,
    CorrelationDuality,
    Stiffness,
    Rsd,
    GaussianDomination,
    KeyBound,
    Loops,
    Surgery,
    SimonLieb,
    MetricXy,
    Depinning,
    Bernstein,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::Duality,
        ExperimentKind::CorrelationDuality,
        ExperimentKind::Stiffness,
        ExperimentKind::Rsd,
        ExperimentKind::KeyBound,
        ExperimentKind::Loops,
        ExperimentKind::GaussianDomination,
        ExperimentKind::Surgery,
        ExperimentKind::SimonLieb,
        ExperimentKind::MetricXy,
        ExperimentKind::Depinning,
        ExperimentKind::Bernstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Duality => "duality",
            ExperimentKind::CorrelationDuality => "correlation-duality",
            ExperimentKind::Stiffness => "stiffness",
            ExperimentKind::Rsd => "rsd",
            ExperimentKind::GaussianDomination => "gaussian-domination",
            ExperimentKind::KeyBound => "key-bound",
            ExperimentKind::Loops => "loops",
            ExperimentKind::Surgery => "surgery",
            ExperimentKind::SimonLieb => "simon-lieb",
            ExperimentKind::MetricXy => "metric-xy",
            ExperimentKind::Depinning => "depinning",
            ExperimentKind::Bernstein => "bernstein",
        }
    }

    /// Whether the experiment runs Monte Carlo chains (and so writes CSV).
    pub fn is_sampled(self) -> bool {
        matches!(self, ExperimentKind::MetricXy | ExperimentKind::Depinning)
    }

    /// The `[params]` keys the experiment reads; any other key set in the
    /// file is rejected.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Duality => &["beta", "points"],
            ExperimentKind::CorrelationDuality => &["beta", "window"],
            ExperimentKind::Stiffness => &["potentials", "instances", "window"],
            ExperimentKind::Rsd => &["instances", "annealed_instances"],
            ExperimentKind::GaussianDomination => &["instances", "window"],
            ExperimentKind::KeyBound => &["beta", "q", "argmax", "max_len", "mc_beta", "mc_size"],
            ExperimentKind::Loops => &["q", "scan", "lambda", "mc_size"],
            ExperimentKind::Surgery => &["lambda", "n"],
            ExperimentKind::SimonLieb => &["beta"],
            ExperimentKind::MetricXy => &["beta", "n", "pairs"],
            ExperimentKind::Depinning => &["lambda"],
            ExperimentKind::Bernstein => &["potentials", "rejected", "symbols", "k_max"],
        }
    }

    /// Whether the experiment takes `[[graph]]` entries.
    pub fn takes_graphs(self) -> bool {
        matches!(
            self,
            ExperimentKind::Duality
                | ExperimentKind::Stiffness
                | ExperimentKind::GaussianDomination
                | ExperimentKind::Surgery
                | ExperimentKind::SimonLieb
                | ExperimentKind::MetricXy
                | ExperimentKind::Depinning
        )
    }

    /// Whether the experiment reads the `[budget]` table.
    pub fn takes_budget(self) -> bool {
        matches!(
            self,
            ExperimentKind::KeyBound | ExperimentKind::Loops | ExperimentKind::MetricXy | ExperimentKind::Depinning
        )
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// The box `[-L, L]²` of ℤ².
    Square,
    /// `n` vertices in a row.
    Path,
    /// A centre joined to `n` leaves.
    Star,
    /// `n` unit squares side by side, the lower-left corner held at 0.
    Ladder,
    /// A graph file in the JSON interchange format.
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub kind: GraphKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl GraphSpec {
    pub fn square(l: usize) -> Self {
        GraphSpec { kind: GraphKind::Square, size: Some(l), file: None }
    }

    pub fn sized(kind: GraphKind, n: usize) -> Self {
        GraphSpec { kind, size: Some(n), file: None }
    }

    fn check(&self) -> Result<(), CliError> {
        match (self.kind, self.size, &self.file) {
            (GraphKind::Json, None, Some(_)) => Ok(()),
            (GraphKind::Json, _, _) => Err(CliError::Config("a json graph needs `file` and no `size`".into())),
            (_, Some(n), None) if n >= 1 => Ok(()),
            (kind, _, _) => Err(CliError::Config(format!("a {kind:?} graph needs a positive `size` and no `file`"))),
        }
    }

    pub fn label(&self) -> String {
        match (self.kind, self.size, &self.file) {
            (GraphKind::Json, _, Some(f)) => format!("json:{}", f.display()),
            (kind, Some(n), _) => format!("{}:{n}", format!("{kind:?}").to_lowercase()),
            (kind, _, _) => format!("{kind:?}").to_lowercase(),
        }
    }

    pub fn build(&self, base: &Path) -> Result<PlanarGraph, CliError> {
        self.check()?;
        let n = self.size.unwrap_or(0);
        Ok(match self.kind {
            GraphKind::Square => build_square_lattice(n),
            GraphKind::Path => path_graph(n),
            GraphKind::Star => star_graph(n),
            GraphKind::Ladder => ladder(n),
            GraphKind::Json => {
                let file = base.join(self.file.as_ref().expect("checked above"));
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| CliError::Config(format!("cannot read graph file {}: {e}", file.display())))?;
                from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?
            }
        })
    }
}

/// `n` unit squares in a row: the smallest graphs with several bounded
/// faces. Vertex 0 is the one held at height 0.
pub fn ladder(n: usize) -> PlanarGraph {
    let mut vertices = Vec::new();
    for row in 0..2 {
        for col in 0..=n {
            let id = vertices.len();
            vertices.push(Vertex { id, pos: [col as f64, row as f64], boundary: id == 0, mediating: false });
        }
    }
    let w = n + 1;
    let mut edges = Vec::new();
    for col in 0..n {
        edges.push((col, col + 1, 1.0));
        edges.push((w + col, w + col + 1, 1.0));
    }
    for col in 0..=n {
        edges.push((col, w + col, 1.0));
    }
    PlanarGraph::from_geometry(vertices, edges).expect("a ladder is planar")
}

/// A potential written either as a spec string (`gaussian:l=1.25`) or as a
/// table (`{ kind = "power", lambda = 1.0, alpha = 1.5 }`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Text(String),
    Table(PotentialKind),
}

impl PotentialSpec {
    pub fn text(s: &str) -> Self {
        PotentialSpec::Text(s.to_string())
    }

    pub fn resolve(&self) -> Result<Potential, CliError> {
        match self {
            PotentialSpec::Text(s) => s.parse().map_err(|e| CliError::Config(format!("potential `{s}`: {e}"))),
            PotentialSpec::Table(k) => Potential::new(k.clone()).map_err(|e| CliError::Config(format!("potential: {e}"))),
        }
    }
}

/// Experiment parameters. Every field is optional; an absent field takes
/// the experiment's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials: Option<Vec<PotentialSpec>>,
    /// Potentials the Bernstein test is expected to reject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Vec<PotentialSpec>>,
    /// Potentials whose Fourier symbol must be positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<Vec<PotentialSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annealed_instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

impl Params {
    /// Names of the fields that are set.
    fn set_keys(&self) -> BTreeSet<String> {
        match serde_json::to_value(self).expect("params serialize") {
            serde_json::Value::Object(m) => m.keys().cloned().collect(),
            _ => BTreeSet::new(),
        }
    }
}

/// Monte Carlo settings shared by every chain of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub sweeps: usize,
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default = "one")]
    pub chains: usize,
    #[serde(default = "default_max_updates")]
    pub max_updates: u64,
}

fn one() -> usize {
    1
}

fn default_max_updates() -> u64 {
    zgf_mc::DEFAULT_MAX_UPDATES
}

impl Budget {
    pub fn new(sweeps: usize, burn_in: usize) -> Self {
        Budget { sweeps, burn_in, thin: 1, chains: 1, max_updates: default_max_updates() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, rename = "graph", skip_serializing_if = "Vec::is_empty")]
    pub graphs: Vec<GraphSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            schema: SCHEMA,
            experiment,
            seed: None,
            out: None,
            graphs: Vec::new(),
            params: Params::default(),
            budget: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Structural checks that need no computation: schema, keys that the
    /// experiment does not read, graph entries, potential specs and the
    /// chain budget.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Config(format!("schema {} is not supported (expected {SCHEMA})", self.schema)));
        }
        let kind = self.experiment;
        let allowed: BTreeSet<String> = kind.params().iter().map(|s| s.to_string()).collect();
        let stray: Vec<String> = self.params.set_keys().difference(&allowed).cloned().collect();
        if !stray.is_empty() {
            return Err(CliError::Config(format!(
                "`{kind}` does not take params {}; it reads {}",
                stray.join(", "),
                kind.params().join(", ")
            )));
        }
        if !self.graphs.is_empty() && !kind.takes_graphs() {
            return Err(CliError::Config(format!("`{kind}` builds its own graphs; remove the [[graph]] entries")));
        }
        for g in &self.graphs {
            g.check()?;
        }
        if self.budget.is_some() && !kind.takes_budget() {
            return Err(CliError::Config(format!("`{kind}` is exact; it takes no [budget]")));
        }
        let p = &self.params;
        for list in [&p.potentials, &p.rejected, &p.symbols].into_iter().flatten() {
            for spec in list {
                spec.resolve()?;
            }
        }
        for list in [&p.beta, &p.lambda, &p.mc_beta].into_iter().flatten() {
            if list.is_empty() || list.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(CliError::Config(format!("couplings must be a non-empty list of positive numbers, got {list:?}")));
            }
        }
        if let Some(q) = &p.q {
            if q.iter().any(|q| (2.0 * q).rem_euclid(2.0) != 1.0) {
                return Err(CliError::Config(format!("levels must be half-integers, got {q:?}")));
            }
        }
        if let Some(b) = &self.budget {
            if b.sweeps <= b.burn_in || b.thin == 0 || b.chains == 0 {
                return Err(CliError::Config(format!(
                    "budget needs sweeps > burn_in and positive thin and chains, got {b:?}"
                )));
            }
            if (b.sweeps - b.burn_in) / b.thin < zgf_mc::MIN_BATCHES {
                return Err(CliError::Config("budget keeps too few sweeps for batch means".into()));
            }
        }
        Ok(())
    }
}
