//! Exact oracles for small instances.
//!
//! Height models are summed exactly over a truncated window by variable
//! elimination; spin models are integrated by the periodic trapezoid rule on
//! an angle grid fine enough that the quadrature error is below `1e-12`.
//! On top of those engines sit the duality identities, the stiffness and
//! Gaussian-domination checks, the lattice-Gaussian moment generating
//! function with its monotonicity suite, and the Simon–Lieb chain.

mod duality;
pub mod elim;
mod gaussian;
mod lattice;
mod report;
mod simon_lieb;
mod sites;
mod spins;
mod surgery;
mod zuf;

pub use duality::{villain_duality, xy_duality, DUALITY_TOL};
pub use gaussian::{
    dirichlet_laplacian, gaussian_domination_check, moment_constant, GaussianDominationReport, DOMINATION_TOL,
};
pub use lattice::{
    annealed_rsd_check, equality_correlation_check, is_psd, lattice_mgf, rsd_suite, submodularity_check, LatticeModel,
    MgfValue, RsdReport, RSD_TAIL, RSD_TOL,
};
pub use report::{inputs_digest, CheckReport};
pub use simon_lieb::{simon_lieb_check, SimonLiebReport, SIMON_LIEB_TOL};
pub use sites::{
    escalate, with_coupling, Marginal, SiteEdge, SiteModel, Truncated, DEFAULT_BUDGET, DEFAULT_K, K_LADDER,
    TAIL_TARGET,
};
pub use spins::{
    quadrature_points, spin_correlation_exact, spin_partition, villain_partition, xy_partition, SpinModel,
    SpinPartition,
};
pub use surgery::{subdivision_marginal_check, surgery_variance_check, SurgeryReport};
pub use zuf::{
    defect_expectation, defect_one_form, height_model, stiffness_check, zuf_marginal, zuf_partition, DefectSign,
    ExactValue, STIFFNESS_TOL,
};

use thiserror::Error;
use zgf_graph::{DualGraph, GraphError};
use zgf_potential::PotentialError;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("enumeration budget exceeded: an intermediate table needs {needed} entries, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

impl ExactError {
    pub fn is_budget(&self) -> bool {
        matches!(self, ExactError::BudgetExceeded { .. })
    }
}

/// An integer height on every face of a dual graph. The outer face is the
/// boundary class and always reads 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightConfig {
    values: Vec<i64>,
    outer: usize,
}

impl HeightConfig {
    pub fn zeros(dg: &DualGraph) -> Self {
        HeightConfig { values: vec![0; dg.num_faces()], outer: dg.outer_face() }
    }

    /// Heights indexed by face id. The entry of the outer face is ignored.
    pub fn from_values(dg: &DualGraph, mut values: Vec<i64>) -> Result<Self, ExactError> {
        if values.len() != dg.num_faces() {
            return Err(ExactError::Precondition(format!(
                "expected {} face values, got {}",
                dg.num_faces(),
                values.len()
            )));
        }
        values[dg.outer_face()] = 0;
        Ok(HeightConfig { values, outer: dg.outer_face() })
    }

    pub fn get(&self, f: usize) -> i64 {
        self.values[f]
    }

    /// Sets an interior face; writes to the boundary class are ignored.
    pub fn set(&mut self, f: usize, n: i64) {
        if f != self.outer {
            self.values[f] = n;
        }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn num_faces(&self) -> usize {
        self.values.len()
    }

    pub fn outer_face(&self) -> usize {
        self.outer
    }

    /// The configuration `-n`.
    pub fn negated(&self) -> Self {
        HeightConfig { values: self.values.iter().map(|n| -n).collect(), outer: self.outer }
    }
}
