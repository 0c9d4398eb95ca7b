use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use zgf_graph::PlanarGraph;
use zgf_potential::{wrapped_gaussian_sum, wrapped_gaussian_terms, WRAPPED_TAIL_TOL};

use crate::{chain_rng, ChainSpec, McError, ModelSpec};

/// Burn-in is cut into windows of this many sweeps; after each the proposal
/// width is nudged toward an acceptance rate in `[0.3, 0.6]`.
const TUNE_WINDOW: usize = 50;

/// One angle per vertex, each in `[-π, π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinConfig {
    pub angles: Vec<f64>,
}

impl SpinConfig {
    pub fn aligned(n: usize) -> Self {
        SpinConfig { angles: vec![0.0; n] }
    }

    /// `σ_x · σ_y = cos(θ_x - θ_y)`.
    pub fn dot(&self, x: usize, y: usize) -> f64 {
        (self.angles[x] - self.angles[y]).cos()
    }
}

fn wrap(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU.
    if t >= PI {
        -PI
    } else {
        t
    }
}

#[derive(Clone, Copy, Debug)]
enum EdgeWeight {
    Xy { bj: f64 },
    Villain { bj: f64, m: usize },
}

impl EdgeWeight {
    fn log(&self, d: f64) -> f64 {
        match *self {
            EdgeWeight::Xy { bj } => bj * d.cos(),
            EdgeWeight::Villain { bj, m } => wrapped_gaussian_sum(d, bj, m).ln(),
        }
    }
}

/// Single-site Metropolis for the XY or Villain model with free boundary
/// conditions. Iterating yields a configuration after burn-in and then
/// after every `thin` sweeps.
pub struct SpinChain {
    adjacency: Vec<Vec<(usize, EdgeWeight)>>,
    config: SpinConfig,
    rng: ChaCha8Rng,
    width: f64,
    random_scan: bool,
    burn_in: usize,
    thin: usize,
    remaining: usize,
    sweeps_done: usize,
    accepted: u64,
    proposed: u64,
}

impl SpinChain {
    pub fn new(g: &PlanarGraph, spec: &ChainSpec, index: u64) -> Result<Self, McError> {
        spec.validate()?;
        let weight = |j: f64| match spec.model {
            ModelSpec::Xy { beta } => Ok(EdgeWeight::Xy { bj: beta * j }),
            ModelSpec::Villain { beta, m } => {
                let bj = beta * j;
                Ok(EdgeWeight::Villain { bj, m: m.unwrap_or_else(|| wrapped_gaussian_terms(bj, WRAPPED_TAIL_TOL)) })
            }
            ModelSpec::Zuf { .. } => Err(McError::Spec("a spin chain needs an xy or villain model".into())),
        };
        spec.check_budget(g.num_vertices())?;
        let mut adjacency = vec![Vec::new(); g.num_vertices()];
        for (u, v, j) in g.edge_list() {
            let w = weight(j)?;
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        Ok(SpinChain {
            adjacency,
            config: SpinConfig::aligned(g.num_vertices()),
            rng: chain_rng(spec.seed, index),
            width: spec.width,
            random_scan: spec.random_scan,
            burn_in: spec.burn_in,
            thin: spec.thin,
            remaining: spec.kept(),
            sweeps_done: 0,
            accepted: 0,
            proposed: 0,
        })
    }

    fn local(&self, x: usize, theta: f64) -> f64 {
        self.adjacency[x].iter().map(|(y, w)| w.log(theta - self.config.angles[*y])).sum()
    }

    fn update(&mut self, x: usize) {
        let old = self.config.angles[x];
        let new = wrap(old + self.width * (self.rng.gen::<f64>() - 0.5));
        let delta = self.local(x, new) - self.local(x, old);
        self.proposed += 1;
        if delta >= 0.0 || self.rng.gen::<f64>() < delta.exp() {
            self.config.angles[x] = new;
            self.accepted += 1;
        }
    }

    pub fn sweep(&mut self) {
        let n = self.config.angles.len();
        for i in 0..n {
            let x = if self.random_scan { self.rng.gen_range(0..n) } else { i };
            self.update(x);
        }
        self.sweeps_done += 1;
    }

    fn burn(&mut self) {
        while self.sweeps_done < self.burn_in {
            let (a0, p0) = (self.accepted, self.proposed);
            let stop = (self.sweeps_done + TUNE_WINDOW).min(self.burn_in);
            while self.sweeps_done < stop {
                self.sweep();
            }
            let rate = (self.accepted - a0) as f64 / (self.proposed - p0).max(1) as f64;
            if rate < 0.3 {
                self.width *= 0.8;
            } else if rate > 0.6 {
                self.width = (self.width * 1.25).min(TAU);
            }
        }
        self.accepted = 0;
        self.proposed = 0;
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    /// The proposal width, frozen once burn-in is over.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Acceptance rate since burn-in ended.
    pub fn acceptance(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

impl Iterator for SpinChain {
    type Item = SpinConfig;

    fn next(&mut self) -> Option<SpinConfig> {
        if self.remaining == 0 {
            return None;
        }
        if self.sweeps_done < self.burn_in {
            self.burn();
        }
        for _ in 0..self.thin {
            self.sweep();
        }
        self.remaining -= 1;
        Some(self.config.clone())
    }
}

/// The first chain of `spec` on `g`.
pub fn sample_spins(g: &PlanarGraph, spec: &ChainSpec) -> Result<SpinChain, McError> {
    SpinChain::new(g, spec, 0)
}
