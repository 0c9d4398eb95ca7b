//! Integer height models on an arbitrary site graph.
//!
//! A [`SiteModel`] is a set of sites joined by edges, each edge carrying a
//! potential `U` and an integer shift, with weight `exp(-U(n_a - n_b + s))`.
//! Sites may be pinned to a value, merged into equality classes, tilted by
//! `exp(t·n)`, or declared real-valued. Real-valued sites may only touch
//! Gaussian edges and are integrated out exactly before any summation.
//!
//! Free integer classes range over the window `[min_pin - K, max_pin + K]`.
//! Because the window moves with the pinned values, shifting every pin by the
//! same integer leaves all results unchanged, exactly.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use zgf_graph::{DualGraph, PlanarGraph};
use zgf_potential::{Potential, PotentialKind};

use crate::elim::Elimination;
use crate::ExactError;

/// Default window half-width.
pub const DEFAULT_K: i64 = 8;
/// Window half-widths tried in turn until the tail is small enough.
pub const K_LADDER: [i64; 4] = [8, 12, 16, 20];
/// Target for the truncation tail estimate.
pub const TAIL_TARGET: f64 = 1e-8;
/// Default bound on intermediate table entries.
pub const DEFAULT_BUDGET: usize = 1 << 27;

#[derive(Clone, Debug)]
pub struct SiteEdge {
    pub a: usize,
    pub b: usize,
    pub shift: i64,
    pub potential: Potential,
}

#[derive(Clone, Debug)]
pub struct SiteModel {
    n: usize,
    edges: Vec<SiteEdge>,
    pinned: Vec<Option<i64>>,
    real: Vec<bool>,
    tilt: Vec<f64>,
    parent: Vec<usize>,
}

/// A partition function evaluated on a finite window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncated {
    pub log_z: f64,
    pub k: i64,
    /// `1 - Z(K-1)/Z(K)`: the relative weight of the outermost shell.
    pub tail: f64,
}

/// Joint law of a few sites.
#[derive(Clone, Debug)]
pub struct Marginal {
    pub sites: Vec<usize>,
    /// Possible values of each queried site.
    pub values: Vec<Vec<i64>>,
    /// Row-major probabilities over the product of `values`.
    pub probs: Vec<f64>,
    pub log_z: f64,
}

impl Marginal {
    /// `E[f(n_{sites[0]}, n_{sites[1]}, ...)]`.
    pub fn expect(&self, f: impl Fn(&[i64]) -> f64) -> f64 {
        let dims: Vec<usize> = self.values.iter().map(|v| v.len()).collect();
        let mut x = vec![0i64; dims.len()];
        let mut acc = 0.0;
        for (mut idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for i in (0..dims.len()).rev() {
                x[i] = self.values[i][idx % dims[i]];
                idx /= dims[i];
            }
            acc += p * f(&x);
        }
        acc
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn gaussian_lambda(p: &Potential) -> Option<f64> {
    match p.kind() {
        PotentialKind::Gaussian { lambda } => Some(*lambda),
        _ => None,
    }
}

/// The potential an edge of coupling `j` carries when the model potential is
/// `u`: Gaussian and power-law energies scale with `j`, the Bessel weight's
/// argument scales with `j` (the dual of an XY bond of strength `βj`), and a
/// table is multiplied by `j`.
pub fn with_coupling(u: &Potential, j: f64) -> Result<Potential, ExactError> {
    if j == 1.0 {
        return Ok(u.clone());
    }
    let p = match u.kind() {
        PotentialKind::Gaussian { lambda } => Potential::gaussian(lambda * j),
        PotentialKind::Bessel { beta } => Potential::bessel(beta * j),
        PotentialKind::Power { lambda, alpha } => Potential::power(lambda * j, *alpha),
        PotentialKind::Tabulated { values, tail_slope } => {
            Potential::tabulated(values.iter().map(|v| v * j).collect(), tail_slope * j)
        }
    };
    Ok(p?)
}

impl SiteModel {
    pub fn new(n: usize) -> Self {
        SiteModel {
            n,
            edges: Vec::new(),
            pinned: vec![None; n],
            real: vec![false; n],
            tilt: vec![0.0; n],
            parent: (0..n).collect(),
        }
    }

    /// Heights on the faces of `dg`, one site per face id, the outer face
    /// pinned to 0 and each dual edge carrying `u` at the primal coupling.
    pub fn from_dual(dg: &DualGraph, u: &Potential) -> Result<Self, ExactError> {
        let mut m = SiteModel::new(dg.num_faces());
        for d in dg.edges() {
            m.add_edge(d.left, d.right, 0, with_coupling(u, d.coupling)?);
        }
        m.pin(dg.outer_face(), 0);
        Ok(m)
    }

    /// Heights on the vertices of `g`, boundary vertices pinned to 0.
    pub fn from_planar(g: &PlanarGraph, u: &Potential) -> Result<Self, ExactError> {
        let mut m = SiteModel::new(g.num_vertices());
        for e in 0..g.num_edges() {
            let (a, b) = g.endpoints(e);
            m.add_edge(a, b, 0, with_coupling(u, g.coupling(e))?);
        }
        for v in g.boundary_vertices() {
            m.pin(v, 0);
        }
        Ok(m)
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[SiteEdge] {
        &self.edges
    }

    pub fn edges_mut(&mut self) -> &mut [SiteEdge] {
        &mut self.edges
    }

    pub fn add_edge(&mut self, a: usize, b: usize, shift: i64, potential: Potential) {
        self.edges.push(SiteEdge { a, b, shift, potential });
    }

    pub fn pin(&mut self, s: usize, value: i64) {
        self.pinned[s] = Some(value);
    }

    pub fn unpin(&mut self, s: usize) {
        self.pinned[s] = None;
    }

    pub fn pinned(&self, s: usize) -> Option<i64> {
        self.pinned[s]
    }

    pub fn set_real(&mut self, s: usize, real: bool) {
        self.real[s] = real;
    }

    pub fn set_tilt(&mut self, s: usize, t: f64) {
        self.tilt[s] = t;
    }

    pub fn tilt(&self, s: usize) -> f64 {
        self.tilt[s]
    }

    /// Forces `n_a = n_b`.
    pub fn merge(&mut self, a: usize, b: usize) {
        let ra = find(&mut self.parent, a);
        let rb = find(&mut self.parent, b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// The equality class representative of `s`.
    pub fn class_of(&self, s: usize) -> usize {
        let mut p = self.parent.clone();
        find(&mut p, s)
    }

    /// Integrates out the real-valued sites. Returns the log of the Gaussian
    /// normalization and the remaining model, whose new Gaussian edges are
    /// the Schur complement (Kron reduction) of the real sites.
    fn integrate_real(&self) -> Result<(f64, SiteModel), ExactError> {
        if !self.real.iter().any(|&r| r) {
            return Ok((0.0, self.clone()));
        }
        let real_ids: Vec<usize> = (0..self.n).filter(|&s| self.real[s]).collect();
        for &s in &real_ids {
            if self.pinned[s].is_some() || self.tilt[s] != 0.0 || self.class_of(s) != s {
                return Err(ExactError::Precondition(format!(
                    "real-valued site {s} cannot be pinned, tilted or merged"
                )));
            }
            if (0..self.n).any(|t| t != s && self.class_of(t) == s) {
                return Err(ExactError::Precondition(format!("real-valued site {s} cannot be merged")));
            }
        }
        let mut rest = self.clone();
        rest.edges.clear();
        // Sites touched by the Gaussian block: real sites and their neighbours.
        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        let mut block_edges = Vec::new();
        for e in &self.edges {
            if self.real[e.a] || self.real[e.b] {
                let lambda = gaussian_lambda(&e.potential).ok_or_else(|| {
                    ExactError::Precondition("real-valued sites need Gaussian edges".into())
                })?;
                if e.shift != 0 {
                    return Err(ExactError::Precondition("real-valued sites cannot carry shifted edges".into()));
                }
                for s in [e.a, e.b] {
                    let next = index.len();
                    index.entry(s).or_insert(next);
                }
                block_edges.push((e.a, e.b, lambda));
            } else {
                rest.edges.push(e.clone());
            }
        }
        let m = index.len();
        let mut lap = DMatrix::<f64>::zeros(m, m);
        for &(a, b, l) in &block_edges {
            let (i, j) = (index[&a], index[&b]);
            if i == j {
                continue;
            }
            lap[(i, i)] += l;
            lap[(j, j)] += l;
            lap[(i, j)] -= l;
            lap[(j, i)] -= l;
        }
        let r_idx: Vec<usize> = index.iter().filter(|(s, _)| self.real[**s]).map(|(_, &i)| i).collect();
        let i_sites: Vec<usize> = index.keys().copied().filter(|&s| !self.real[s]).collect();
        let i_idx: Vec<usize> = i_sites.iter().map(|s| index[s]).collect();
        let lrr = DMatrix::from_fn(r_idx.len(), r_idx.len(), |a, b| lap[(r_idx[a], r_idx[b])]);
        let lri = DMatrix::from_fn(r_idx.len(), i_idx.len(), |a, b| lap[(r_idx[a], i_idx[b])]);
        let lii = DMatrix::from_fn(i_idx.len(), i_idx.len(), |a, b| lap[(i_idx[a], i_idx[b])]);
        let chol = lrr.clone().cholesky().ok_or_else(|| {
            ExactError::Precondition("a real-valued component touches no integer site".into())
        })?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let log_norm = 0.5 * r_idx.len() as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
        let schur = &lii - lri.transpose() * chol.solve(&lri);
        for a in 0..i_sites.len() {
            for b in a + 1..i_sites.len() {
                let c = -schur[(a, b)];
                if c > 1e-14 {
                    rest.add_edge(i_sites[a], i_sites[b], 0, Potential::gaussian(c)?);
                }
            }
        }
        rest.real = vec![false; self.n];
        Ok((log_norm, rest))
    }

    /// Builds the elimination problem for window half-width `k`. Returns the
    /// problem, the class variable of each site (or its pinned value) and the
    /// value of each variable's first domain entry.
    fn build(&self, k: i64, budget: usize) -> Result<Built, ExactError> {
        let (log_norm, model) = self.integrate_real()?;
        let mut parent = model.parent.clone();
        let classes: Vec<usize> = (0..model.n).map(|s| find(&mut parent, s)).collect();
        let mut class_pin: BTreeMap<usize, i64> = BTreeMap::new();
        for s in 0..model.n {
            if let Some(p) = model.pinned[s] {
                match class_pin.insert(classes[s], p) {
                    Some(old) if old != p => {
                        return Err(ExactError::Precondition(format!(
                            "merged sites pinned to different values {old} and {p}"
                        )))
                    }
                    _ => {}
                }
            }
        }
        if class_pin.is_empty() {
            return Err(ExactError::Precondition("no pinned site: the sum over heights diverges".into()));
        }
        let lo = class_pin.values().min().copied().unwrap() - k;
        let hi = class_pin.values().max().copied().unwrap() + k;
        let width = (hi - lo + 1) as usize;
        // Free classes become variables.
        let mut var_of_class: BTreeMap<usize, usize> = BTreeMap::new();
        for s in 0..model.n {
            let c = classes[s];
            if !class_pin.contains_key(&c) {
                let next = var_of_class.len();
                var_of_class.entry(c).or_insert(next);
            }
        }
        let site_slot: Vec<Slot> = (0..model.n)
            .map(|s| match class_pin.get(&classes[s]) {
                Some(&p) => Slot::Pinned(p),
                None => Slot::Free(var_of_class[&classes[s]]),
            })
            .collect();
        let nv = var_of_class.len();
        let mut elim = Elimination::new(vec![width; nv], budget);
        elim.add_log_constant(log_norm);
        let value = |i: usize| lo + i as i64;
        // Tilts.
        let mut tilt = vec![0.0; nv];
        for s in 0..model.n {
            match site_slot[s] {
                Slot::Free(v) => tilt[v] += model.tilt[s],
                Slot::Pinned(p) => elim.add_log_constant(model.tilt[s] * p as f64),
            }
        }
        for (v, &t) in tilt.iter().enumerate() {
            if t != 0.0 {
                // Centre the exponent to keep the table in range.
                let mid = t * (lo + hi) as f64 / 2.0;
                elim.add_unary(v, (0..width).map(|i| (t * value(i) as f64 - mid).exp()).collect());
                elim.add_log_constant(mid);
            }
        }
        // Edges: pairwise tables accumulated per ordered variable pair.
        let mut pairs: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        let mut unary: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for e in &model.edges {
            let u = &e.potential;
            match (site_slot[e.a], site_slot[e.b]) {
                (Slot::Pinned(pa), Slot::Pinned(pb)) => elim.add_log_constant(-u.eval(pa - pb + e.shift)),
                (Slot::Free(va), Slot::Pinned(pb)) => {
                    let t = unary.entry(va).or_insert_with(|| vec![0.0; width]);
                    for (i, x) in t.iter_mut().enumerate() {
                        *x -= u.eval(value(i) - pb + e.shift);
                    }
                }
                (Slot::Pinned(pa), Slot::Free(vb)) => {
                    let t = unary.entry(vb).or_insert_with(|| vec![0.0; width]);
                    for (i, x) in t.iter_mut().enumerate() {
                        *x -= u.eval(pa - value(i) + e.shift);
                    }
                }
                (Slot::Free(va), Slot::Free(vb)) if va == vb => elim.add_log_constant(-u.eval(e.shift)),
                (Slot::Free(va), Slot::Free(vb)) => {
                    let (key, flip) = if va < vb { ((va, vb), false) } else { ((vb, va), true) };
                    let t = pairs.entry(key).or_insert_with(|| vec![0.0; width * width]);
                    // Energies depend only on the difference of indices.
                    let diff: Vec<f64> = (0..2 * width - 1)
                        .map(|d| u.eval(d as i64 - (width as i64 - 1) + e.shift))
                        .collect();
                    for i in 0..width {
                        for j in 0..width {
                            // Row i is the smaller variable's value.
                            let (ia, ib) = if flip { (j, i) } else { (i, j) };
                            t[i * width + j] -= diff[ia + width - 1 - ib];
                        }
                    }
                }
            }
        }
        for (v, energies) in unary {
            let w = exp_shifted(&energies, &mut elim);
            elim.add_unary(v, w);
        }
        for ((a, b), energies) in pairs {
            let w = exp_shifted(&energies, &mut elim);
            elim.add_pairwise(a, b, w);
        }
        Ok(Built { elim, site_slot, lo, width })
    }

    /// `log Z` at window half-width `k`.
    pub fn log_partition(&self, k: i64, budget: usize) -> Result<f64, ExactError> {
        let built = self.build(k, budget)?;
        Ok(built.elim.run(&[])?.log_total())
    }

    /// `log Z` with the window escalated along [`K_LADDER`] (starting at
    /// `k_min`) until the outer shell carries less than [`TAIL_TARGET`].
    pub fn partition(&self, k_min: i64, budget: usize) -> Result<Truncated, ExactError> {
        let mut out = escalate(&[self], k_min, TAIL_TARGET, budget)?;
        Ok(out.pop().unwrap())
    }

    /// Joint law of `sites` at window half-width `k`.
    pub fn marginal(&self, sites: &[usize], k: i64, budget: usize) -> Result<Marginal, ExactError> {
        let built = self.build(k, budget)?;
        let mut vars: Vec<usize> = Vec::new();
        for &s in sites {
            if let Slot::Free(v) = built.site_slot[s] {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        let f = built.elim.run(&vars)?;
        let log_z = f.log_total();
        let total: f64 = f.table.iter().sum();
        // Expand the table over variables to one over the requested sites.
        let values: Vec<Vec<i64>> = sites
            .iter()
            .map(|&s| match built.site_slot[s] {
                Slot::Pinned(p) => vec![p],
                Slot::Free(_) => (0..built.width).map(|i| built.lo + i as i64).collect(),
            })
            .collect();
        let dims: Vec<usize> = values.iter().map(|v| v.len()).collect();
        let size: usize = dims.iter().product();
        let mut probs = vec![0.0; size];
        let mut x = vec![0usize; sites.len()];
        for (mut idx, slot) in probs.iter_mut().enumerate() {
            for i in (0..dims.len()).rev() {
                x[i] = idx % dims[i];
                idx /= dims[i];
            }
            // Sites sharing a variable must agree.
            let mut assign: Vec<Option<usize>> = vec![None; vars.len()];
            let mut ok = true;
            for (i, &s) in sites.iter().enumerate() {
                if let Slot::Free(v) = built.site_slot[s] {
                    let pos = vars.iter().position(|&w| w == v).unwrap();
                    match assign[pos] {
                        Some(a) if a != x[i] => ok = false,
                        _ => assign[pos] = Some(x[i]),
                    }
                }
            }
            if !ok {
                continue;
            }
            let mut flat = 0;
            for (pos, a) in assign.iter().enumerate() {
                flat = flat * built.width + a.unwrap_or(0);
                let _ = pos;
            }
            *slot = f.table[flat] / total;
        }
        Ok(Marginal { sites: sites.to_vec(), values, probs, log_z })
    }
}

/// Evaluates several models at a common window half-width, the first one on
/// [`K_LADDER`] at or above `k_min` where every tail is below `target`. If
/// none qualifies the largest rung (or `k_min` when it exceeds the ladder)
/// is returned and the tails say how far off it is.
pub fn escalate(models: &[&SiteModel], k_min: i64, target: f64, budget: usize) -> Result<Vec<Truncated>, ExactError> {
    if k_min < 1 {
        return Err(ExactError::Precondition(format!("window half-width must be positive, got {k_min}")));
    }
    let mut rungs: Vec<i64> = K_LADDER.iter().copied().filter(|&k| k >= k_min).collect();
    if rungs.is_empty() {
        rungs.push(k_min);
    }
    let mut last = Vec::new();
    for &k in &rungs {
        last.clear();
        for m in models {
            let full = m.log_partition(k, budget)?;
            let inner = m.log_partition(k - 1, budget)?;
            let tail = (-(inner - full).exp_m1()).max(0.0);
            last.push(Truncated { log_z: full, k, tail });
        }
        if last.iter().all(|t| t.tail < target) {
            break;
        }
    }
    Ok(last)
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Pinned(i64),
    Free(usize),
}

struct Built {
    elim: Elimination,
    site_slot: Vec<Slot>,
    lo: i64,
    width: usize,
}

/// `exp(-(E - E_min))` with `-E_min` moved into the constant. Infinite
/// energies become zero weights.
fn exp_shifted(neg_energies: &[f64], elim: &mut Elimination) -> Vec<f64> {
    let top = neg_energies.iter().cloned().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return vec![0.0; neg_energies.len()];
    }
    elim.add_log_constant(top);
    neg_energies.iter().map(|x| (x - top).exp()).collect()
}
