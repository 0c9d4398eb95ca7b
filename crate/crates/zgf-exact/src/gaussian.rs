//! Gaussian domination for the integer Gaussian field: its moment generating
//! function is bounded by that of the real Gaussian field with the same
//! coupling, and moments of `⟨v, n⟩` follow.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use zgf_graph::DualGraph;
use zgf_potential::Potential;

use crate::report::{inputs_digest, CheckReport};
use crate::sites::{escalate, DEFAULT_BUDGET, DEFAULT_K, TAIL_TARGET};
use crate::zuf::height_model;
use crate::ExactError;

/// Relative slack allowed on the generating-function bound.
pub const DOMINATION_TOL: f64 = 1e-9;

/// The weighted Dirichlet Laplacian `-Δ` on the interior faces of `dg`, in
/// the order of `dg.interior_faces()`: `Σ_e J_e (n_x - n_y)²` for the dual
/// edges, with the outer face held at 0.
pub fn dirichlet_laplacian(dg: &DualGraph) -> DMatrix<f64> {
    let interior = dg.interior_faces();
    let mut idx = vec![usize::MAX; dg.num_faces()];
    for (i, &f) in interior.iter().enumerate() {
        idx[f] = i;
    }
    let k = interior.len();
    let mut lap = DMatrix::zeros(k, k);
    for d in dg.edges() {
        if d.left == d.right {
            continue;
        }
        let (a, b) = (idx[d.left], idx[d.right]);
        let j = d.coupling;
        if a != usize::MAX {
            lap[(a, a)] += j;
        }
        if b != usize::MAX {
            lap[(b, b)] += j;
        }
        if a != usize::MAX && b != usize::MAX {
            lap[(a, b)] -= j;
            lap[(b, a)] -= j;
        }
    }
    lap
}

/// `⟨v, (-Δ)^{-1} v⟩` for `v` indexed by face id (outer entry ignored).
fn green_form(dg: &DualGraph, v: &[f64]) -> Result<f64, ExactError> {
    let lap = dirichlet_laplacian(dg);
    let vi = DVector::from_iterator(dg.interior_faces().len(), dg.interior_faces().iter().map(|&f| v[f]));
    if vi.is_empty() {
        return Ok(0.0);
    }
    let chol = lap
        .cholesky()
        .ok_or_else(|| ExactError::Precondition("Dirichlet Laplacian is not invertible".into()))?;
    Ok(vi.dot(&chol.solve(&vi)))
}

/// `D_ε = Γ(1 + 1/(2ε))^ε`.
pub fn moment_constant(eps: f64) -> f64 {
    gamma(1.0 + 0.5 / eps).powf(eps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianDominationReport {
    /// `𝕄[v] ≤ exp(⟨v, -Δ⁻¹ v⟩ / (2λ))`.
    pub mgf: CheckReport,
    /// `E[|⟨v,n⟩|^{1/ε}]^ε ≤ D_ε √(2⟨v, -Δ⁻¹ v⟩/λ)` for `ε = 1/2, 1/4`.
    pub moments: Vec<CheckReport>,
}

impl GaussianDominationReport {
    pub fn pass(&self) -> bool {
        self.mgf.pass && self.moments.iter().all(|m| m.pass)
    }
}

#[derive(Serialize)]
struct Inputs<'a> {
    lambda: f64,
    faces: usize,
    v: &'a [f64],
    k: i64,
}

/// Both Gaussian-domination bounds for the integer Gaussian field of
/// coupling `λ` (times the edge couplings) on the faces of `dg`. `v` is
/// indexed by face id; its outer entry is ignored.
pub fn gaussian_domination_check(
    dg: &DualGraph,
    lambda: f64,
    v: &[f64],
    k: i64,
) -> Result<GaussianDominationReport, ExactError> {
    if v.len() != dg.num_faces() {
        return Err(ExactError::Precondition(format!("need one entry per face ({})", dg.num_faces())));
    }
    let mut v = v.to_vec();
    v[dg.outer_face()] = 0.0;
    let digest = inputs_digest(&Inputs { lambda, faces: dg.num_faces(), v: &v, k });
    let u = Potential::gaussian(lambda)?;
    let base = height_model(dg, &u, &BTreeMap::new())?;
    let mut tilted = base.clone();
    for (f, &t) in v.iter().enumerate() {
        tilted.set_tilt(f, t);
    }
    let t = escalate(&[&tilted, &base], k.max(DEFAULT_K), TAIL_TARGET, DEFAULT_BUDGET)?;
    let tail = t[0].tail.max(t[1].tail);
    let g = green_form(dg, &v)?;
    let mgf = CheckReport::le(
        "gaussian-domination",
        digest.clone(),
        (t[0].log_z - t[1].log_z).exp(),
        (g / (2.0 * lambda)).exp(),
        DOMINATION_TOL * (g / (2.0 * lambda)).exp(),
        tail,
    );

    let support: Vec<usize> = (0..v.len()).filter(|&f| v[f] != 0.0).collect();
    let marginal = base.marginal(&support, t[1].k, DEFAULT_BUDGET)?;
    let weights: Vec<f64> = support.iter().map(|&f| v[f]).collect();
    let moments = [0.5, 0.25]
        .iter()
        .map(|&eps: &f64| {
            let p = 1.0 / eps;
            let m = marginal.expect(|n| {
                let s: f64 = n.iter().zip(&weights).map(|(&x, w)| x as f64 * w).sum();
                s.abs().powf(p)
            });
            CheckReport::le(
                &format!("gradient-moment-eps-{eps}"),
                digest.clone(),
                m.powf(eps),
                moment_constant(eps) * (2.0 * g / lambda).sqrt(),
                DOMINATION_TOL,
                t[1].tail,
            )
        })
        .collect();
    Ok(GaussianDominationReport { mgf, moments })
}
