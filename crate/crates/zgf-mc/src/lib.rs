//! Seeded Monte Carlo for integer height models and O(2) spin models.
//!
//! Heights are updated by single-site heat bath, spins by single-site
//! Metropolis. Every chain is driven by its own ChaCha stream derived from a
//! master seed (see [`chain_rng`]), so a run is reproducible bit for bit.
//! On top of the samplers sit batch-means estimators and the studies that
//! need sizes beyond exact summation: the metric-graph refinement of the XY
//! model, the spin-correlation / level-line bound and the depinning scan.

mod heights;
mod keybound;
mod output;
mod spins;
mod stats;
mod studies;

pub use heights::{heat_bath_conditional, sample_zuf, Conditional, ZufChain, CONDITIONAL_TAIL};
pub use keybound::{
    box_family, estimate_key_bound, key_bound_exact, KeyBoundEstimate, KeyBoundExactRow, KeyBoundQuery,
    KeyBoundReport, PathEdge,
};
pub use output::{write_manifest, write_observables, Manifest, ObservableRow};
pub use spins::{sample_spins, SpinChain, SpinConfig};
pub use stats::{batch_means, pool, Estimate, MIN_BATCHES};
pub use studies::{
    center_face, depinning_scan, metric_xy_refinement, DepinningRow, DepinningTable, MetricEstimate, Trend,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use zgf_potential::Potential;

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid chain spec: {0}")]
    Spec(String),
    #[error("budget exceeded: {needed} site updates requested, limit is {limit}")]
    Budget { needed: u64, limit: u64 },
    #[error(transparent)]
    Exact(#[from] zgf_exact::ExactError),
    #[error(transparent)]
    Loops(#[from] zgf_loops::LoopsError),
    #[error(transparent)]
    Graph(#[from] zgf_graph::GraphError),
    #[error(transparent)]
    Potential(#[from] zgf_potential::PotentialError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl McError {
    pub fn is_budget(&self) -> bool {
        matches!(self, McError::Budget { .. }) || matches!(self, McError::Exact(e) if e.is_budget())
    }
}

/// Which measure a chain samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    /// Integer heights on the faces with edge potential `U`.
    Zuf { potential: Potential },
    /// Edge weight `exp(βJ cos Δθ)`.
    Xy { beta: f64 },
    /// Edge weight `Σ_{|m| ≤ M} exp(-βJ(Δθ + 2πm)²/2)`. Without `m`, `M` is
    /// the smallest count whose dropped tail is below `1e-14`.
    Villain { beta: f64, m: Option<usize> },
}

/// Default cap on `sweeps × sites` for one chain.
pub const DEFAULT_MAX_UPDATES: u64 = 4_000_000_000;

/// Everything that determines a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub model: ModelSpec,
    /// Total sweeps, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th sweep after burn-in.
    pub thin: usize,
    pub seed: u64,
    /// Height window half-width around the neighbours' range (heights only).
    pub window: i64,
    /// Initial Metropolis proposal width in radians (spins only).
    pub width: f64,
    /// Visit sites in random order instead of the fixed raster order.
    pub random_scan: bool,
    /// Independent chains, run in parallel and pooled.
    pub chains: usize,
    pub max_updates: u64,
}

impl ChainSpec {
    pub fn new(model: ModelSpec, sweeps: usize, burn_in: usize, seed: u64) -> Self {
        ChainSpec {
            model,
            sweeps,
            burn_in,
            thin: 1,
            seed,
            window: 6,
            width: std::f64::consts::PI,
            random_scan: false,
            chains: 1,
            max_updates: DEFAULT_MAX_UPDATES,
        }
    }

    pub fn zuf(potential: Potential, sweeps: usize, burn_in: usize, seed: u64) -> Self {
        Self::new(ModelSpec::Zuf { potential }, sweeps, burn_in, seed)
    }

    pub fn xy(beta: f64, sweeps: usize, burn_in: usize, seed: u64) -> Self {
        Self::new(ModelSpec::Xy { beta }, sweeps, burn_in, seed)
    }

    pub fn villain(beta: f64, sweeps: usize, burn_in: usize, seed: u64) -> Self {
        Self::new(ModelSpec::Villain { beta, m: None }, sweeps, burn_in, seed)
    }

    pub fn with_chains(mut self, chains: usize) -> Self {
        self.chains = chains;
        self
    }

    pub fn with_model(&self, model: ModelSpec) -> Self {
        ChainSpec { model, ..self.clone() }
    }

    /// The same spec with another master seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        ChainSpec { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::Spec(m));
        if self.sweeps <= self.burn_in {
            return bad(format!("sweeps ({}) must exceed burn-in ({})", self.sweeps, self.burn_in));
        }
        if self.thin == 0 || self.chains == 0 {
            return bad("thinning and chain count must be at least 1".into());
        }
        if (self.sweeps - self.burn_in) / self.thin < MIN_BATCHES {
            return bad(format!("fewer than {MIN_BATCHES} kept sweeps, too few for batch means"));
        }
        match &self.model {
            ModelSpec::Zuf { .. } => {
                if self.window < 6 {
                    return bad(format!("height window K must be at least 6, got {}", self.window));
                }
            }
            ModelSpec::Xy { beta } | ModelSpec::Villain { beta, .. } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return bad(format!("β must be positive, got {beta}"));
                }
                if !(self.width > 0.0 && self.width <= std::f64::consts::TAU) {
                    return bad(format!("proposal width must lie in (0, 2π], got {}", self.width));
                }
            }
        }
        Ok(())
    }

    /// Number of samples each chain keeps.
    pub fn kept(&self) -> usize {
        (self.sweeps - self.burn_in) / self.thin
    }

    fn check_budget(&self, sites: usize) -> Result<(), McError> {
        let needed = (self.sweeps as u64).saturating_mul(sites as u64).saturating_mul(self.chains as u64);
        if needed > self.max_updates {
            return Err(McError::Budget { needed, limit: self.max_updates });
        }
        Ok(())
    }
}

/// The random stream of chain `index` under master seed `seed`.
///
/// This is the split function: ChaCha8 keyed by `seed` (expanded by
/// `seed_from_u64`) and switched to stream number `index`. Distinct indices
/// give independent, non-overlapping streams under one key, and the mapping
/// does not depend on thread scheduling.
pub fn chain_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
