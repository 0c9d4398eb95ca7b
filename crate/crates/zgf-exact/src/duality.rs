//! Height/spin duality identities, checked by running both sides.
//!
//! Expanding each Villain edge weight by Poisson summation and integrating
//! the angles out leaves an integer 1-form with zero divergence, i.e. the
//! gradient of a face height function:
//!
//! `Z_ZGF(λ_e = 1/(βJ_e)) = (2π)^{-|V|} Π_e √(2πβJ_e) · Z_Vill(β)`.
//!
//! The same expansion with `exp(βJ cos φ) = Σ_m I_m(βJ) e^{imφ}` gives
//!
//! `Z_XY(β) = (2π)^{|V|} Π_e I_0(βJ_e) · Z_ZBF`,
//!
//! where the height model carries Bessel weights `I_m(βJ_e)/I_0(βJ_e)`.

use std::f64::consts::TAU;

use serde::Serialize;
use zgf_graph::{dual, PlanarGraph};
use zgf_potential::{log_bessel_i, Potential};

use crate::report::{inputs_digest, CheckReport};
use crate::sites::{SiteModel, DEFAULT_BUDGET, DEFAULT_K};
use crate::spins::{spin_partition, SpinModel};
use crate::ExactError;

/// Relative tolerance of both identities.
pub const DUALITY_TOL: f64 = 1e-6;

#[derive(Serialize)]
struct DualityInputs<'a> {
    model: SpinModel,
    beta: f64,
    edges: &'a [(usize, usize, f64)],
    points: Option<usize>,
}

/// The face-height model dual to the spin model on `g`, with per-edge
/// potential `edge_potential(J_e)`.
fn dual_model(g: &PlanarGraph, edge_potential: impl Fn(f64) -> Result<Potential, ExactError>) -> Result<SiteModel, ExactError> {
    let dg = dual(g)?;
    let mut m = SiteModel::new(dg.num_faces());
    for d in dg.edges() {
        m.add_edge(d.left, d.right, 0, edge_potential(d.coupling)?);
    }
    m.pin(dg.outer_face(), 0);
    Ok(m)
}

/// `Z_ZGF` against the prefactor times `Z_Vill`. `lhs` is the height side,
/// `rhs` the spin side.
pub fn villain_duality(g: &PlanarGraph, beta: f64, points: Option<usize>) -> Result<CheckReport, ExactError> {
    let edges = g.edge_list();
    let digest = inputs_digest(&DualityInputs { model: SpinModel::Villain, beta, edges: &edges, points });
    let heights = dual_model(g, |j| Ok(Potential::gaussian(1.0 / (beta * j))?))?.partition(DEFAULT_K, DEFAULT_BUDGET)?;
    let spins = spin_partition(g, SpinModel::Villain, beta, points)?;
    let log_prefactor = -(g.num_vertices() as f64) * TAU.ln()
        + edges.iter().map(|&(_, _, j)| 0.5 * (TAU * beta * j).ln()).sum::<f64>();
    Ok(CheckReport::equal(
        "villain-duality",
        digest,
        heights.log_z.exp(),
        (log_prefactor + spins.log_z).exp(),
        DUALITY_TOL,
        heights.tail,
    ))
}

/// `(2π)^{|V|} Π I_0(βJ_e) Z_ZBF` against `Z_XY`.
pub fn xy_duality(g: &PlanarGraph, beta: f64, points: Option<usize>) -> Result<CheckReport, ExactError> {
    let edges = g.edge_list();
    let digest = inputs_digest(&DualityInputs { model: SpinModel::Xy, beta, edges: &edges, points });
    let heights = dual_model(g, |j| Ok(Potential::bessel(beta * j)?))?.partition(DEFAULT_K, DEFAULT_BUDGET)?;
    let spins = spin_partition(g, SpinModel::Xy, beta, points)?;
    let mut log_prefactor = g.num_vertices() as f64 * TAU.ln();
    for &(_, _, j) in &edges {
        log_prefactor += log_bessel_i(0, beta * j)?;
    }
    Ok(CheckReport::equal(
        "xy-duality",
        digest,
        (log_prefactor + heights.log_z).exp(),
        spins.log_z.exp(),
        DUALITY_TOL,
        heights.tail,
    ))
}
