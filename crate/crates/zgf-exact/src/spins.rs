//! O(2) spin models by angle quadrature.
//!
//! Every angle runs over the grid `2πj/Q`. For a periodic analytic integrand
//! the trapezoid rule is exact up to the Fourier modes it aliases, so `Q` is
//! chosen from the decay of the edge weights' Fourier coefficients. One angle
//! per connected component is fixed to 0 by rotation invariance, which
//! contributes a factor `2π` instead of a sum.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use zgf_graph::PlanarGraph;
use zgf_potential::bessel::log_bessel_ratio;
use zgf_potential::villain_weight;

use crate::elim::Elimination;
use crate::sites::DEFAULT_BUDGET;
use crate::ExactError;

/// Target size of the aliased Fourier mass.
const QUADRATURE_TOL: f64 = 1e-12;
/// Fewest grid points per angle.
const MIN_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinModel {
    /// Edge weight `exp(βJ cos(θ_u - θ_v))`.
    Xy,
    /// Edge weight `Σ_m exp(-βJ(θ_u - θ_v + 2πm)²/2)`.
    Villain,
}

/// A spin system reduced to what the quadrature needs: vertices and weighted
/// edges.
#[derive(Clone, Debug)]
pub(crate) struct SpinSystem {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl SpinSystem {
    pub fn from_graph(g: &PlanarGraph) -> Self {
        SpinSystem { n: g.num_vertices(), edges: g.edge_list() }
    }

    /// The subsystem induced on `keep` (in that order), with its vertices
    /// renumbered `0..keep.len()`.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut id = vec![usize::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            id[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(a, b, _)| id[*a] != usize::MAX && id[*b] != usize::MAX)
            .map(|&(a, b, j)| (id[a], id[b], j))
            .collect();
        SpinSystem { n: keep.len(), edges }
    }

    fn degree_and_coupling(&self) -> (usize, f64) {
        let mut deg = vec![0usize; self.n];
        let mut j_max = 0.0f64;
        for &(a, b, j) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
            j_max = j_max.max(j);
        }
        (deg.into_iter().max().unwrap_or(0), j_max)
    }

    /// Component label of every vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, _) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Grid size per angle for `model` at inverse temperature `beta`.
///
/// A vertex of degree `d` sees at most the product of `d` edge weights. For
/// the XY model its Fourier coefficients are bounded by
/// `I_m(dβJ)/I_0(dβJ)`; for the Villain model they are Gaussian,
/// `exp(-m²/(2dβJ))`. `Q` is the first grid size at which the two leading
/// aliased modes `±Q` together drop below `1e-12`.
pub fn quadrature_points(g: &PlanarGraph, model: SpinModel, beta: f64) -> usize {
    let (d, j) = SpinSystem::from_graph(g).degree_and_coupling();
    points_for(model, beta * j * d as f64)
}

fn points_for(model: SpinModel, b: f64) -> usize {
    if b <= 0.0 {
        return MIN_POINTS;
    }
    match model {
        SpinModel::Xy => (MIN_POINTS..)
            .find(|&q| log_bessel_ratio(q as i64, b) < (0.5 * QUADRATURE_TOL).ln())
            .expect("Bessel ratios decay"),
        SpinModel::Villain => ((2.0 * b * (2.0 / QUADRATURE_TOL).ln()).sqrt().ceil() as usize).max(MIN_POINTS),
    }
}

/// A spin partition function and the grid it was computed on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinPartition {
    pub log_z: f64,
    pub points: usize,
}

fn check_beta(model: SpinModel, beta: f64) -> Result<(), ExactError> {
    let ok = match model {
        SpinModel::Xy => beta >= 0.0 && beta.is_finite(),
        SpinModel::Villain => beta > 0.0 && beta.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(ExactError::Precondition(format!("invalid inverse temperature {beta} for {model:?}")))
    }
}

/// The quadrature problem: each vertex a variable over the grid, gauge
/// vertices with a single value (angle 0).
fn build(sys: &SpinSystem, model: SpinModel, beta: f64, q: usize, gauge: &[usize]) -> Elimination {
    let mut is_gauge = vec![false; sys.n];
    for &v in gauge {
        is_gauge[v] = true;
    }
    let domains: Vec<usize> = (0..sys.n).map(|v| if is_gauge[v] { 1 } else { q }).collect();
    let mut elim = Elimination::new(domains.clone(), DEFAULT_BUDGET);
    let free = sys.n - gauge.len();
    elim.add_log_constant(gauge.len() as f64 * TAU.ln() + free as f64 * (TAU / q as f64).ln());
    for &(a, b, j) in &sys.edges {
        let bj = beta * j;
        // Weight of the angle difference `2π s / Q`, with the XY weight
        // written as exp(βJ(cos - 1)) · exp(βJ).
        let w: Vec<f64> = (0..q)
            .map(|s| {
                let d = TAU * s as f64 / q as f64;
                match model {
                    SpinModel::Xy => (bj * (d.cos() - 1.0)).exp(),
                    SpinModel::Villain => villain_weight(d, bj),
                }
            })
            .collect();
        if model == SpinModel::Xy {
            elim.add_log_constant(bj);
        }
        let diff = |i: usize, k: usize| w[(i + q - k) % q];
        if a == b || (is_gauge[a] && is_gauge[b]) {
            elim.add_log_constant(w[0].ln());
        } else if is_gauge[b] {
            elim.add_unary(a, (0..q).map(|i| diff(i, 0)).collect());
        } else if is_gauge[a] {
            elim.add_unary(b, (0..q).map(|k| diff(0, k)).collect());
        } else {
            let mut t = vec![0.0; q * q];
            for i in 0..q {
                for k in 0..q {
                    t[i * q + k] = diff(i, k);
                }
            }
            elim.add_pairwise(a, b, t);
        }
    }
    elim
}

/// One gauge vertex per component, preferring `first` for its own.
fn gauge_vertices(sys: &SpinSystem, first: Option<usize>) -> Vec<usize> {
    let label = sys.components();
    let mut chosen = vec![usize::MAX; label.iter().map(|l| l + 1).max().unwrap_or(0)];
    if let Some(x) = first {
        chosen[label[x]] = x;
    }
    for v in 0..sys.n {
        if chosen[label[v]] == usize::MAX {
            chosen[label[v]] = v;
        }
    }
    chosen
}

pub(crate) fn system_partition(
    sys: &SpinSystem,
    model: SpinModel,
    beta: f64,
    points: Option<usize>,
) -> Result<SpinPartition, ExactError> {
    check_beta(model, beta)?;
    let (d, j) = sys.degree_and_coupling();
    let q = points.unwrap_or_else(|| points_for(model, beta * j * d as f64));
    let gauge = gauge_vertices(sys, None);
    let log_z = build(sys, model, beta, q, &gauge).run(&[])?.log_total();
    Ok(SpinPartition { log_z, points: q })
}

/// `⟨cos(θ_x - θ_t)⟩` for every `t` in `targets`.
pub(crate) fn system_correlations(
    sys: &SpinSystem,
    model: SpinModel,
    beta: f64,
    x: usize,
    targets: &[usize],
    points: Option<usize>,
) -> Result<Vec<f64>, ExactError> {
    check_beta(model, beta)?;
    let (d, j) = sys.degree_and_coupling();
    let q = points.unwrap_or_else(|| points_for(model, beta * j * d as f64));
    let label = sys.components();
    let gauge = gauge_vertices(sys, Some(x));
    let elim = build(sys, model, beta, q, &gauge);
    targets
        .iter()
        .map(|&y| {
            if y == x {
                return Ok(1.0);
            }
            if label[y] != label[x] {
                return Ok(0.0);
            }
            let f = elim.clone().run(&[y])?;
            let total: f64 = f.table.iter().sum();
            Ok(f.table.iter().enumerate().map(|(s, p)| p * (TAU * s as f64 / q as f64).cos()).sum::<f64>() / total)
        })
        .collect()
}

/// `Z` of the spin model on `g` with free boundary conditions, by
/// quadrature on `points` angles per vertex (or the automatic grid).
pub fn spin_partition(
    g: &PlanarGraph,
    model: SpinModel,
    beta: f64,
    points: Option<usize>,
) -> Result<SpinPartition, ExactError> {
    system_partition(&SpinSystem::from_graph(g), model, beta, points)
}

/// The Villain partition function `∫ Π_e Σ_m exp(-βJ_e(θ_u - θ_v + 2πm)²/2) dθ`.
pub fn villain_partition(g: &PlanarGraph, beta: f64, points: Option<usize>) -> Result<SpinPartition, ExactError> {
    spin_partition(g, SpinModel::Villain, beta, points)
}

/// The XY partition function `∫ Π_e exp(βJ_e cos(θ_u - θ_v)) dθ`.
pub fn xy_partition(g: &PlanarGraph, beta: f64, points: Option<usize>) -> Result<SpinPartition, ExactError> {
    spin_partition(g, SpinModel::Xy, beta, points)
}

/// `⟨σ_x · σ_y⟩ = ⟨cos(θ_x - θ_y)⟩`.
pub fn spin_correlation_exact(g: &PlanarGraph, model: SpinModel, beta: f64, x: usize, y: usize) -> Result<f64, ExactError> {
    if x >= g.num_vertices() || y >= g.num_vertices() {
        return Err(ExactError::Precondition(format!("vertices {x}, {y} not in the graph")));
    }
    Ok(system_correlations(&SpinSystem::from_graph(g), model, beta, x, &[y], None)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use zgf_graph::path_graph;
    use zgf_potential::bessel_i;

    /// Direct 1D trapezoid on a fine grid.
    fn integral(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        (0..n).map(|k| f(TAU * k as f64 / n as f64 - PI)).sum::<f64>() * TAU / n as f64
    }

    #[test]
    fn two_vertices_reduce_to_one_integral() {
        let g = path_graph(2);
        for beta in [0.3, 1.0, 2.5] {
            let xy = xy_partition(&g, beta, None).unwrap().log_z.exp();
            let want = TAU * TAU * bessel_i(0, beta).unwrap();
            assert!(((xy - want) / want).abs() < 1e-12, "β={beta}: {xy} vs {want}");
            let v = villain_partition(&g, beta, None).unwrap().log_z.exp();
            let want = TAU * integral(|t| villain_weight(t, beta), 4096);
            assert!(((v - want) / want).abs() < 1e-12);
            assert!((want - TAU * (TAU / beta).sqrt()).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn infinite_temperature() {
        let g = path_graph(3);
        let z = xy_partition(&g, 0.0, None).unwrap().log_z;
        assert!((z - 3.0 * TAU.ln()).abs() < 1e-13);
        assert!(spin_correlation_exact(&g, SpinModel::Xy, 0.0, 0, 2).unwrap().abs() < 1e-14);
    }

    #[test]
    fn path_correlations_factorize() {
        let g = path_graph(3);
        let beta = 1.3;
        let r = bessel_i(1, beta).unwrap() / bessel_i(0, beta).unwrap();
        let c = spin_correlation_exact(&g, SpinModel::Xy, beta, 0, 2).unwrap();
        assert!((c - r * r).abs() < 1e-12);
        assert_eq!(spin_correlation_exact(&g, SpinModel::Villain, beta, 1, 1).unwrap(), 1.0);
    }
}
