//! The three surgery steps that turn the integer Gaussian field on one graph
//! into one on a sparser graph, checked by exact summation. Heights live on
//! the vertices; vertices flagged as boundary are held at 0.
//!
//! 1. Every edge is split by a real-valued midpoint. Integrating the midpoint
//!    out restores the original edge exactly, so the law of the original
//!    vertices is unchanged.
//! 2. The midpoints are made integer-valued: a sublattice of the real field,
//!    so fluctuations can only go down.
//! 3. Groups of midpoints are forced equal: again a sublattice.

use serde::{Deserialize, Serialize};
use zgf_graph::{degree_reduce, subdivide_edges, PlanarGraph};
use zgf_potential::Potential;

use crate::report::{inputs_digest, CheckReport};
use crate::sites::{escalate, SiteModel, DEFAULT_BUDGET, DEFAULT_K, TAIL_TARGET};
use crate::ExactError;

/// Agreement required of the step-1 marginals.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Slack allowed on the variance comparisons.
pub const VARIANCE_TOL: f64 = 1e-9;

fn vertex_model(g: &PlanarGraph, lambda: f64) -> Result<SiteModel, ExactError> {
    SiteModel::from_planar(g, &Potential::gaussian(lambda)?)
}

fn free_originals(g: &PlanarGraph) -> Vec<usize> {
    (0..g.num_vertices()).filter(|&v| !g.vertex(v).boundary).collect()
}

/// Splits every edge into `r` equal parts of coupling `rλ` with real-valued
/// midpoints and compares the joint law of the free original vertices with
/// that of the unsplit graph. `lhs` is the largest probability difference.
pub fn subdivision_marginal_check(g: &PlanarGraph, lambda: f64, r: usize) -> Result<CheckReport, ExactError> {
    if r == 0 {
        return Err(ExactError::Precondition("split count must be positive".into()));
    }
    let digest = inputs_digest(&("subdivision", g.edge_list(), lambda, r));
    let original = vertex_model(g, lambda)?;
    let sub = subdivide_edges(g, &vec![r as f64; r])?;
    let mut split = vertex_model(&sub, lambda)?;
    for v in g.num_vertices()..sub.num_vertices() {
        split.set_real(v, true);
    }
    let free = free_originals(g);
    let t = escalate(&[&original], DEFAULT_K, TAIL_TARGET, DEFAULT_BUDGET)?;
    let a = original.marginal(&free, t[0].k, DEFAULT_BUDGET)?;
    let b = split.marginal(&free, t[0].k, DEFAULT_BUDGET)?;
    let diff = a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(CheckReport::le("subdivision-marginal", digest, diff, 0.0, MARGINAL_TOL, t[0].tail))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryReport {
    pub max_degree: usize,
    /// Coupling of every reduced edge divided by the original coupling `λ`.
    pub coupling_factors: Vec<f64>,
    /// `E[n_x²]` of the free original vertices for the original model and
    /// after each step.
    pub variances: [Vec<f64>; 4],
    /// Step 1 reproduces the original variances; steps 2 and 3 do not raise
    /// them.
    pub checks: Vec<CheckReport>,
}

impl SurgeryReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn second_moments(m: &SiteModel, sites: &[usize], k: i64) -> Result<Vec<f64>, ExactError> {
    sites
        .iter()
        .map(|&s| Ok(m.marginal(&[s], k, DEFAULT_BUDGET)?.expect(|n| (n[0] * n[0]) as f64)))
        .collect()
}

/// Runs the degree reduction on `g` and tracks `E[n_x²]` for the free
/// original vertices through the three steps at coupling `λ`.
pub fn surgery_variance_check(g: &PlanarGraph, lambda: f64) -> Result<SurgeryReport, ExactError> {
    let red = degree_reduce(g)?;
    let digest = inputs_digest(&("surgery", g.edge_list(), lambda));
    let free = free_originals(g);
    let original = vertex_model(g, lambda)?;
    let mut step1 = vertex_model(&red.subdivided, lambda)?;
    let step2 = step1.clone();
    for v in g.num_vertices()..red.subdivided.num_vertices() {
        step1.set_real(v, true);
    }
    let mut step3 = step2.clone();
    for group in &red.merges {
        for w in group.windows(2) {
            step3.merge(w[0], w[1]);
        }
    }
    let t = escalate(&[&original, &step1, &step2, &step3], DEFAULT_K, TAIL_TARGET, DEFAULT_BUDGET)?;
    let k = t[0].k;
    let tail = t.iter().map(|x| x.tail).fold(0.0, f64::max);
    let variances = [
        second_moments(&original, &free, k)?,
        second_moments(&step1, &free, k)?,
        second_moments(&step2, &free, k)?,
        second_moments(&step3, &free, k)?,
    ];
    let mut checks = Vec::new();
    for (i, &x) in free.iter().enumerate() {
        checks.push(CheckReport::equal(
            &format!("step1-variance-{x}"),
            digest.clone(),
            variances[1][i],
            variances[0][i],
            MARGINAL_TOL,
            tail,
        ));
        checks.push(CheckReport::le(
            &format!("step2-variance-{x}"),
            digest.clone(),
            variances[2][i],
            variances[1][i],
            VARIANCE_TOL,
            tail,
        ));
        checks.push(CheckReport::le(
            &format!("step3-variance-{x}"),
            digest.clone(),
            variances[3][i],
            variances[2][i],
            VARIANCE_TOL,
            tail,
        ));
    }
    let base = g.couplings().iter().cloned().fold(f64::NAN, f64::max);
    Ok(SurgeryReport {
        max_degree: red.reduced.max_degree(),
        coupling_factors: red.reduced.couplings().iter().map(|j| j / base).collect(),
        variances,
        checks,
    })
}
