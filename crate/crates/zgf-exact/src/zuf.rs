//! Height functions on the faces of a planar graph: constrained partition
//! functions, the defect-line operator and the stiffness-modulus check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use zgf_graph::DualGraph;
use zgf_potential::Potential;

use crate::report::{inputs_digest, CheckReport};
use crate::sites::{escalate, Marginal, SiteModel, Truncated, DEFAULT_BUDGET, TAIL_TARGET};
use crate::ExactError;

/// Tail target used where a ratio must be resolved to `1e-12`.
const STRICT_TAIL: f64 = 1e-14;
/// Tolerance of the stiffness ratio test.
pub const STIFFNESS_TOL: f64 = 1e-12;

/// The face-height model of `dg` with some faces held at given values. The
/// outer face is held at 0 unless `constraints` says otherwise.
pub fn height_model(dg: &DualGraph, u: &Potential, constraints: &BTreeMap<usize, i64>) -> Result<SiteModel, ExactError> {
    let mut m = SiteModel::from_dual(dg, u)?;
    for (&f, &n) in constraints {
        if f >= dg.num_faces() {
            return Err(ExactError::Precondition(format!("no face {f}")));
        }
        m.pin(f, n);
    }
    Ok(m)
}

fn check_window(k: i64) -> Result<(), ExactError> {
    if k < 4 {
        return Err(ExactError::Precondition(format!("window half-width K must be at least 4, got {k}")));
    }
    Ok(())
}

/// `Z = Σ_n Π_e exp(-U(n_x - n_y))` over heights agreeing with `constraints`,
/// free faces ranging over the window. The window starts at `k` and widens
/// until the outermost shell weighs less than `1e-8` of the total; if that
/// never happens the returned tail says so.
pub fn zuf_partition(
    dg: &DualGraph,
    u: &Potential,
    constraints: &BTreeMap<usize, i64>,
    k: i64,
) -> Result<Truncated, ExactError> {
    check_window(k)?;
    height_model(dg, u, constraints)?.partition(k, DEFAULT_BUDGET)
}

/// Joint law of the heights on `faces`, at the window [`zuf_partition`]
/// settles on.
pub fn zuf_marginal(
    dg: &DualGraph,
    u: &Potential,
    constraints: &BTreeMap<usize, i64>,
    faces: &[usize],
    k: i64,
) -> Result<(Marginal, Truncated), ExactError> {
    check_window(k)?;
    let m = height_model(dg, u, constraints)?;
    let t = m.partition(k, DEFAULT_BUDGET)?;
    Ok((m.marginal(faces, t.k, DEFAULT_BUDGET)?, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefectSign {
    Plus,
    Minus,
}

impl DefectSign {
    fn value(self) -> i64 {
        match self {
            DefectSign::Plus => 1,
            DefectSign::Minus => -1,
        }
    }
}

/// Half-edges traversed by the vertex path `path`, checked to be simple.
fn path_half_edges(dg: &DualGraph, path: &[usize]) -> Result<Vec<usize>, ExactError> {
    let g = dg.primal();
    let mut seen = vec![false; g.num_vertices()];
    for &v in path {
        if v >= g.num_vertices() {
            return Err(ExactError::Precondition(format!("no vertex {v}")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(ExactError::Precondition(format!("path visits vertex {v} twice")));
        }
    }
    path.windows(2)
        .map(|w| {
            g.find_half_edge(w[0], w[1])
                .ok_or_else(|| ExactError::Precondition(format!("vertices {} and {} are not adjacent", w[0], w[1])))
        })
        .collect()
}

/// The 1-form `Γ` of a primal path: for each traversed edge, the dual edge
/// obtained by rotating it counter-clockwise, as `(from_face, to_face)`, on
/// which `Γ = +1` (and `-1` on the reverse). Rotating a half-edge
/// counter-clockwise points from the face on its right to the face on its
/// left.
pub fn defect_one_form(dg: &DualGraph, path: &[usize]) -> Result<Vec<(usize, usize)>, ExactError> {
    let g = dg.primal();
    Ok(path_half_edges(dg, path)?
        .into_iter()
        .map(|h| (g.face_right(h), g.face_left(h)))
        .collect())
}

/// A value together with its truncation certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub value: f64,
    pub tail: f64,
    pub k: i64,
}

/// `E[T^±_γ] = Z_γ^± / Z`, where `Z_γ^±` replaces `U(n_u - n_v)` by
/// `U(n_u - n_v ± Γ(u, v))` on the dual edges crossing the vertex path `γ`.
pub fn defect_expectation(
    dg: &DualGraph,
    u: &Potential,
    path: &[usize],
    sign: DefectSign,
    k: i64,
) -> Result<ExactValue, ExactError> {
    check_window(k)?;
    let gamma = defect_one_form(dg, path)?;
    let plain = SiteModel::from_dual(dg, u)?;
    let mut shifted = plain.clone();
    let g = dg.primal();
    for (h, (from, to)) in path_half_edges(dg, path)?.into_iter().zip(gamma) {
        let e = &mut shifted.edges_mut()[zgf_graph::PlanarGraph::edge_of(h)];
        e.a = from;
        e.b = to;
        e.shift = sign.value();
        debug_assert_eq!(g.face_right(h), from);
    }
    let t = escalate(&[&shifted, &plain], k, TAIL_TARGET, DEFAULT_BUDGET)?;
    Ok(ExactValue { value: (t[0].log_z - t[1].log_z).exp(), tail: t[0].tail.max(t[1].tail), k: t[0].k })
}

#[derive(Serialize)]
struct StiffnessInputs<'a> {
    potential: &'a Potential,
    faces: usize,
    a: &'a BTreeMap<usize, i64>,
    b: &'a BTreeMap<usize, i64>,
    k: i64,
}

/// Positivity of the stiffness modulus: with heights held at `F_A` on `A`
/// and `F_B` on `B`, lowering `F_A` by one must not decrease `Z`.
///
/// The outer face belongs to `B` at height 0 unless it is listed in `A` or
/// `B`. Requires `min F_A - 1 ≥ max F_B`.
pub fn stiffness_check(
    dg: &DualGraph,
    u: &Potential,
    a: &BTreeMap<usize, i64>,
    b: &BTreeMap<usize, i64>,
    k: i64,
) -> Result<CheckReport, ExactError> {
    check_window(k)?;
    if let Some(f) = a.keys().find(|f| b.contains_key(f)) {
        return Err(ExactError::Precondition(format!("face {f} is in both A and B")));
    }
    let mut b_full = b.clone();
    let outer = dg.outer_face();
    if !a.contains_key(&outer) {
        b_full.entry(outer).or_insert(0);
    }
    if let (Some(min_a), Some(max_b)) = (a.values().min(), b_full.values().max()) {
        if min_a - 1 < *max_b {
            return Err(ExactError::Precondition(format!(
                "need min F_A - 1 ≥ max F_B, got min F_A = {min_a}, max F_B = {max_b}"
            )));
        }
    }
    let digest = inputs_digest(&StiffnessInputs { potential: u, faces: dg.num_faces(), a, b, k });
    if a.is_empty() {
        return Ok(CheckReport::ge("stiffness", digest, 1.0, 1.0, STIFFNESS_TOL, 0.0));
    }
    let mut high: BTreeMap<usize, i64> = b_full.clone();
    high.extend(a.iter().map(|(&f, &n)| (f, n)));
    let mut low = b_full;
    low.extend(a.iter().map(|(&f, &n)| (f, n - 1)));
    let m_high = height_model(dg, u, &high)?;
    let m_low = height_model(dg, u, &low)?;
    let t = escalate(&[&m_low, &m_high], k, STRICT_TAIL, DEFAULT_BUDGET)?;
    let ratio = (t[0].log_z - t[1].log_z).exp();
    Ok(CheckReport::ge("stiffness", digest, ratio, 1.0, STIFFNESS_TOL, t[0].tail.max(t[1].tail)))
}
