//! Embedded planar graphs for height-function and O(2) spin models.
//!
//! A [`PlanarGraph`] is a half-edge structure driven by a rotation system;
//! coordinates are carried along for output only. The crate builds finite
//! lattice boxes, their duals under Dirichlet conventions, edge subdivisions
//! and the degree-reduction surgery that maps any lattice to a degree-three
//! graph.

mod dual;
mod io;
mod lattice;
mod planar;
mod surgery;

pub use dual::{dual, DualEdge, DualGraph};
pub use io::{from_json, to_json, GraphJson};
pub use lattice::{build_periodic_lattice, build_square_lattice, parse_kind, square_vertex};
pub use planar::{Face, HalfEdge, LatticeKind, OuterFace, PlanarGraph, Vertex};
pub use surgery::{degree_reduce, subdivide_edges, DegreeReduction};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid embedding: {0}")]
    Embedding(String),
    #[error("edge {edge} has non-positive or non-finite coupling {value}")]
    Coupling { edge: usize, value: f64 },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("subdivision needs at least one split factor")]
    EmptySplit,
    #[error("unsupported lattice kind `{0}`")]
    UnsupportedKind(String),
    #[error("malformed graph JSON: {0}")]
    Json(String),
}

/// A small path graph `0 — 1 — … — (n−1)` on the x-axis, unit couplings.
/// Handy for spin-model checks where no faces are needed.
pub fn path_graph(n: usize) -> PlanarGraph {
    let vertices = (0..n)
        .map(|i| Vertex { id: i, pos: [i as f64, 0.0], boundary: false, mediating: false })
        .collect();
    let edges = (1..n).map(|i| (i - 1, i, 1.0)).collect();
    PlanarGraph::from_geometry(vertices, edges).expect("a path is planar")
}

/// A star with centre 0 and `leaves` leaves on the unit circle, unit couplings.
pub fn star_graph(leaves: usize) -> PlanarGraph {
    let mut vertices = vec![Vertex { id: 0, pos: [0.0, 0.0], boundary: false, mediating: false }];
    for k in 0..leaves {
        let a = std::f64::consts::TAU * k as f64 / leaves.max(1) as f64;
        vertices.push(Vertex { id: k + 1, pos: [a.cos(), a.sin()], boundary: false, mediating: false });
    }
    let edges = (1..=leaves).map(|k| (0, k, 1.0)).collect();
    PlanarGraph::from_geometry(vertices, edges).expect("a star is planar")
}
