//! `⟨σ_x · σ_y⟩^Vill_β ≥ P^{ℤGF}_{1/β}[A^q_{γ,e}]`, checked exactly on tiny
//! boxes and estimated by paired chains on larger ones.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use zgf_exact::{height_model, spin_correlation_exact, with_coupling, HeightConfig, SpinModel, DEFAULT_BUDGET};
use zgf_graph::{dual, DualGraph, PlanarGraph};
use zgf_loops::{explore, QRule};
use zgf_potential::Potential;

use crate::stats::Estimate;
use crate::studies::{estimate_heights, estimate_spins};
use crate::{ChainSpec, McError, ModelSpec};

/// A preselected path `γ` from `y` to `x` (vertex list) and the oriented
/// edge `e = (x, x')` the level line must start along.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEdge {
    pub gamma: Vec<usize>,
    pub e: (usize, usize),
}

impl PathEdge {
    pub fn x(&self) -> usize {
        *self.gamma.last().expect("γ is non-empty")
    }

    pub fn y(&self) -> usize {
        self.gamma[0]
    }
}

/// Configurations lighter than this are left out of the exact sum; their
/// mass is counted in the reported tail.
const NEGLIGIBLE: f64 = 1e-18;
/// Largest number of free faces the exact check enumerates.
const MAX_FREE_FACES: usize = 6;
/// Slack allowed for round-off in the exact comparison.
const EXACT_TOL: f64 = 1e-12;

/// The declared family on a square box: for every ordered pair `y ≠ x`,
/// every monotone lattice path from `y` to `x` with at most `max_len`
/// steps, plus the one-vertex path `γ = (x)`; each combined with every edge
/// `(x, x')` whose far end is off the path.
pub fn box_family(g: &PlanarGraph, max_len: usize) -> Vec<PathEdge> {
    let coords: HashMap<[i64; 2], usize> =
        g.vertices().iter().map(|v| ([v.pos[0].round() as i64, v.pos[1].round() as i64], v.id)).collect();
    let pos = |v: usize| {
        let p = g.vertex(v).pos;
        [p[0].round() as i64, p[1].round() as i64]
    };
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for y in 0..g.num_vertices() {
        // Depth-first over monotone extensions toward every target at once.
        fn grow(
            path: &mut Vec<usize>,
            dirs: [i64; 2],
            max_len: usize,
            coords: &HashMap<[i64; 2], usize>,
            pos: &dyn Fn(usize) -> [i64; 2],
            out: &mut Vec<Vec<usize>>,
        ) {
            out.push(path.clone());
            if path.len() > max_len {
                return;
            }
            let p = pos(*path.last().unwrap());
            for step in [[dirs[0], 0], [0, dirs[1]]] {
                if step == [0, 0] {
                    continue;
                }
                if let Some(&v) = coords.get(&[p[0] + step[0], p[1] + step[1]]) {
                    path.push(v);
                    grow(path, dirs, max_len, coords, pos, out);
                    path.pop();
                }
            }
        }
        let mut found = Vec::new();
        for dirs in [[1, 1], [1, -1], [-1, 1], [-1, -1], [1, 0], [-1, 0], [0, 1], [0, -1]] {
            grow(&mut vec![y], dirs, max_len, &coords, &pos, &mut found);
        }
        found.sort();
        found.dedup();
        paths.extend(found);
    }
    let mut family = Vec::new();
    for gamma in paths {
        let x = *gamma.last().unwrap();
        for x2 in g.neighbors(x) {
            if !gamma.contains(&x2) {
                family.push(PathEdge { gamma: gamma.clone(), e: (x, x2) });
            }
        }
    }
    family
}

/// One `(γ, e, rule)` of the exact check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyBoundExactRow {
    pub path: PathEdge,
    pub rule: QRule,
    /// Villain `⟨σ_x · σ_y⟩`.
    pub lhs: f64,
    /// `P[A^q_{γ,e}]` summed over the enumerated configurations.
    pub rhs: f64,
    /// Mass of the configurations not enumerated.
    pub tail: f64,
    pub pass: bool,
}

fn energy(dg: &DualGraph, pots: &[Potential], h: &HeightConfig) -> f64 {
    dg.edges().iter().zip(pots).map(|(e, u)| u.eval(h.get(e.left) - h.get(e.right))).sum()
}

/// Exhaustive check of the bound on a box small enough to list every height
/// configuration.
///
/// Heights range over `[-K, K]` with `K` large enough that configurations
/// outside carry less than `1e-18`; probabilities are normalized by the
/// exact partition function on a wider window, so the enumerated `rhs` is
/// a lower bound for the true probability and exceeds it by at most `tail`.
pub fn key_bound_exact(
    g: &PlanarGraph,
    beta: f64,
    family: &[PathEdge],
    rules: &[QRule],
) -> Result<Vec<KeyBoundExactRow>, McError> {
    let dg = dual(g)?;
    let free = dg.interior_faces().to_vec();
    if free.len() > MAX_FREE_FACES {
        return Err(McError::Exact(zgf_exact::ExactError::BudgetExceeded {
            needed: free.len(),
            budget: MAX_FREE_FACES,
        }));
    }
    let lambda = 1.0 / beta;
    let u = Potential::gaussian(lambda)?;
    let pots: Vec<Potential> = dg.edges().iter().map(|e| with_coupling(&u, e.coupling)).collect::<Result<_, _>>()?;
    // On a box where every face touches the boundary, a configuration with
    // some |n| = K pays at least λK²/2 on that face's boundary edge, so
    // λK²/2 > 45 makes it negligible. Elsewhere the reported tail, measured
    // against the exact Z, says how much was missed.
    let k = ((90.0 / lambda).sqrt().ceil() as i64).max(2);
    let log_z = height_model(&dg, &u, &BTreeMap::new())?.log_partition(k + 4, DEFAULT_BUDGET)?;

    let mut lhs_cache: HashMap<(usize, usize), f64> = HashMap::new();
    for p in family {
        let key = (p.x(), p.y());
        if let std::collections::hash_map::Entry::Vacant(v) = lhs_cache.entry(key) {
            v.insert(spin_correlation_exact(g, SpinModel::Villain, beta, key.0, key.1)?);
        }
        // Surface malformed paths before the long loop.
        explore(&dg, &HeightConfig::zeros(&dg), &p.gamma, p.e, QRule::Fixed(0.5))?;
    }

    let mut rhs = vec![vec![0.0; rules.len()]; family.len()];
    let mut kept = 0.0;
    let mut h = HeightConfig::zeros(&dg);
    let width = (2 * k + 1) as usize;
    let total = width.pow(free.len() as u32);
    for idx in 0..total {
        let mut r = idx;
        for &f in &free {
            h.set(f, (r % width) as i64 - k);
            r /= width;
        }
        let p = (-energy(&dg, &pots, &h) - log_z).exp();
        if p < NEGLIGIBLE {
            continue;
        }
        kept += p;
        for (i, pe) in family.iter().enumerate() {
            for (j, &rule) in rules.iter().enumerate() {
                if explore(&dg, &h, &pe.gamma, pe.e, rule)?.success {
                    rhs[i][j] += p;
                }
            }
        }
    }
    let tail = (1.0 - kept).max(0.0);
    let mut rows = Vec::new();
    for (i, pe) in family.iter().enumerate() {
        let lhs = lhs_cache[&(pe.x(), pe.y())];
        for (j, &rule) in rules.iter().enumerate() {
            let rhs = rhs[i][j];
            rows.push(KeyBoundExactRow {
                path: pe.clone(),
                rule,
                lhs,
                rhs,
                tail,
                pass: lhs >= rhs - EXACT_TOL,
            });
        }
    }
    Ok(rows)
}

/// A question for the sampled version: one `(γ, e)` and the level rules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyBoundQuery {
    pub path: PathEdge,
    pub rules: Vec<QRule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyBoundEstimate {
    pub path: PathEdge,
    pub lhs: Estimate,
    pub rhs: Vec<(QRule, Estimate)>,
    /// Some rule has `lhs + 3σ_L < rhs - 3σ_R`.
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyBoundReport {
    pub beta: f64,
    pub items: Vec<KeyBoundEstimate>,
    pub flagged: bool,
}

/// Paired estimates of both sides: a Villain chain at `beta` on `g` for the
/// correlations, and a ℤGF chain at `λ = 1/β` on the dual for the events.
/// The spin chains use streams `0..chains` and the height chains the next
/// `chains` streams of `spec.seed`.
pub fn estimate_key_bound(
    g: &PlanarGraph,
    beta: f64,
    queries: &[KeyBoundQuery],
    spec: &ChainSpec,
) -> Result<KeyBoundReport, McError> {
    let dg = dual(g)?;
    for q in queries {
        explore(&dg, &HeightConfig::zeros(&dg), &q.path.gamma, q.path.e, QRule::Fixed(0.5))?;
    }
    let spin_spec = spec.with_model(ModelSpec::Villain { beta, m: None });
    let lhs = estimate_spins(g, &spin_spec, 0, |s| queries.iter().map(|q| s.dot(q.path.x(), q.path.y())).collect())?;
    let height_spec = spec.with_model(ModelSpec::Zuf { potential: Potential::gaussian(1.0 / beta)? });
    let rhs = estimate_heights(&dg, &height_spec, spec.chains as u64, |h| {
        queries
            .iter()
            .flat_map(|q| {
                q.rules.iter().map(|&rule| {
                    let hit = explore(&dg, h, &q.path.gamma, q.path.e, rule).map(|r| r.success).unwrap_or(false);
                    f64::from(u8::from(hit))
                })
            })
            .collect()
    })?;
    let mut items = Vec::new();
    let mut k = 0;
    for (i, q) in queries.iter().enumerate() {
        let l = lhs[i];
        let r: Vec<(QRule, Estimate)> = q.rules.iter().enumerate().map(|(j, &rule)| (rule, rhs[k + j])).collect();
        k += q.rules.len();
        let violated = r.iter().any(|(_, e)| l.mean + 3.0 * l.sigma < e.mean - 3.0 * e.sigma);
        items.push(KeyBoundEstimate { path: q.path.clone(), lhs: l, rhs: r, violated });
    }
    let flagged = items.iter().any(|i| i.violated);
    Ok(KeyBoundReport { beta, items, flagged })
}
