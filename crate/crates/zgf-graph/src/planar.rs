//! Half-edge representation of an embedded planar multigraph.
//!
//! Edge `e` owns the two half-edges `2e` (from its first endpoint to its
//! second) and `2e + 1` (the reverse), so `twin(h) = h ^ 1`. The embedding is
//! a rotation system: for every vertex the outgoing half-edges in
//! counter-clockwise order. Faces are the orbits of `next_face`, with the face
//! of a half-edge lying to its left.

use serde::{Deserialize, Serialize};

use crate::GraphError;

/// Which finite lattice a graph was cut from, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
    Hexagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    /// Embedding coordinates; advisory only, used for output and plotting.
    pub pos: [f64; 2],
    /// Pinned under Dirichlet conditions when heights live on vertices.
    pub boundary: bool,
    /// Introduced by subdivision or merging rather than present in the input.
    pub mediating: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfEdge {
    pub origin: usize,
    pub twin: usize,
    /// Next half-edge along the boundary of the face to the left.
    pub next_face: usize,
    /// Next outgoing half-edge counter-clockwise around the origin.
    pub next_vertex: usize,
    /// Face to the left.
    pub face: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub id: usize,
    /// Boundary cycle, each half-edge having this face on its left.
    pub cycle: Vec<usize>,
}

/// How the unbounded face is singled out when the graph is assembled.
#[derive(Clone, Copy, Debug)]
pub enum OuterFace {
    /// The face to the left of this half-edge is the outer face.
    LeftOf(usize),
    /// The face whose boundary polygon has the most negative signed area.
    ByArea,
}

#[derive(Clone, Debug)]
pub struct PlanarGraph {
    vertices: Vec<Vertex>,
    endpoints: Vec<(usize, usize)>,
    couplings: Vec<f64>,
    half_edges: Vec<HalfEdge>,
    prev_vertex: Vec<usize>,
    first_out: Vec<Option<usize>>,
    faces: Vec<Face>,
    outer: usize,
    kind: Option<LatticeKind>,
}

impl PlanarGraph {
    /// Assemble a graph from its rotation system.
    ///
    /// `rotations[v]` lists the half-edges leaving `v` in counter-clockwise
    /// order; every half-edge must appear exactly once, at its origin.
    pub fn from_rotations(
        vertices: Vec<Vertex>,
        edges: Vec<(usize, usize, f64)>,
        rotations: Vec<Vec<usize>>,
        outer: OuterFace,
    ) -> Result<Self, GraphError> {
        let nv = vertices.len();
        if rotations.len() != nv {
            return Err(GraphError::Embedding(format!(
                "{} rotation lists for {} vertices",
                rotations.len(),
                nv
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return Err(GraphError::Embedding(format!("vertex {i} carries id {}", v.id)));
            }
        }
        let nh = 2 * edges.len();
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut couplings = Vec::with_capacity(edges.len());
        for (e, &(u, v, j)) in edges.iter().enumerate() {
            if u >= nv || v >= nv {
                return Err(GraphError::Embedding(format!("edge {e} has an endpoint out of range")));
            }
            if !(j > 0.0 && j.is_finite()) {
                return Err(GraphError::Coupling { edge: e, value: j });
            }
            endpoints.push((u, v));
            couplings.push(j);
        }
        let origin_of = |h: usize| if h.is_multiple_of(2) { endpoints[h / 2].0 } else { endpoints[h / 2].1 };

        let mut seen = vec![false; nh];
        let mut next_vertex = vec![usize::MAX; nh];
        let mut prev_vertex = vec![usize::MAX; nh];
        let mut first_out = vec![None; nv];
        for (v, rot) in rotations.iter().enumerate() {
            for (k, &h) in rot.iter().enumerate() {
                if h >= nh || seen[h] || origin_of(h) != v {
                    return Err(GraphError::Embedding(format!(
                        "rotation at vertex {v} lists half-edge {h} incorrectly"
                    )));
                }
                seen[h] = true;
                let nxt = rot[(k + 1) % rot.len()];
                next_vertex[h] = nxt;
                prev_vertex[nxt] = h;
            }
            first_out[v] = rot.first().copied();
        }
        if let Some(h) = seen.iter().position(|s| !s) {
            return Err(GraphError::Embedding(format!("half-edge {h} missing from rotations")));
        }

        let mut half_edges: Vec<HalfEdge> = (0..nh)
            .map(|h| HalfEdge {
                origin: origin_of(h),
                twin: h ^ 1,
                // The face to the left continues clockwise-next around the head.
                next_face: prev_vertex[h ^ 1],
                next_vertex: next_vertex[h],
                face: usize::MAX,
            })
            .collect();

        let mut faces = Vec::new();
        for start in 0..nh {
            if half_edges[start].face != usize::MAX {
                continue;
            }
            let id = faces.len();
            let mut cycle = Vec::new();
            let mut h = start;
            loop {
                if half_edges[h].face != usize::MAX {
                    return Err(GraphError::Embedding("face orbit does not close".into()));
                }
                half_edges[h].face = id;
                cycle.push(h);
                h = half_edges[h].next_face;
                if h == start {
                    break;
                }
            }
            faces.push(Face { id, cycle });
        }
        if faces.is_empty() {
            faces.push(Face { id: 0, cycle: Vec::new() });
        }

        let outer_id = match outer {
            OuterFace::LeftOf(h) => {
                if h >= nh {
                    return Err(GraphError::Embedding(format!("outer hint {h} out of range")));
                }
                half_edges[h].face
            }
            OuterFace::ByArea => {
                let area = |f: &Face| -> f64 {
                    f.cycle
                        .iter()
                        .map(|&h| {
                            let a = vertices[half_edges[h].origin].pos;
                            let b = vertices[half_edges[h ^ 1].origin].pos;
                            a[0] * b[1] - a[1] * b[0]
                        })
                        .sum::<f64>()
                };
                let mut best = 0;
                let mut best_area = f64::INFINITY;
                for f in &faces {
                    let a = area(f);
                    if a < best_area {
                        best_area = a;
                        best = f.id;
                    }
                }
                best
            }
        };

        Ok(Self {
            vertices,
            endpoints,
            couplings,
            half_edges,
            prev_vertex,
            first_out,
            faces,
            outer: outer_id,
            kind: None,
        })
    }

    /// Assemble a straight-line drawing, deriving each rotation by sorting the
    /// outgoing edges by angle. Parallel edges cannot be ordered this way.
    pub fn from_geometry(vertices: Vec<Vertex>, edges: Vec<(usize, usize, f64)>) -> Result<Self, GraphError> {
        let nv = vertices.len();
        let mut rotations: Vec<Vec<(f64, usize)>> = vec![Vec::new(); nv];
        for (e, &(u, v, _)) in edges.iter().enumerate() {
            if u >= nv || v >= nv {
                return Err(GraphError::Embedding(format!("edge {e} has an endpoint out of range")));
            }
            let (pu, pv) = (vertices[u].pos, vertices[v].pos);
            rotations[u].push(((pv[1] - pu[1]).atan2(pv[0] - pu[0]), 2 * e));
            rotations[v].push(((pu[1] - pv[1]).atan2(pu[0] - pv[0]), 2 * e + 1));
        }
        let mut rot = Vec::with_capacity(nv);
        for (v, mut list) in rotations.into_iter().enumerate() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(GraphError::Embedding(format!("two edges leave vertex {v} at the same angle")));
            }
            rot.push(list.into_iter().map(|(_, h)| h).collect());
        }
        Self::from_rotations(vertices, edges, rot, OuterFace::ByArea)
    }

    pub fn with_kind(mut self, kind: Option<LatticeKind>) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> Option<LatticeKind> {
        self.kind
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.endpoints.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn half_edge(&self, h: usize) -> &HalfEdge {
        &self.half_edges[h]
    }

    pub fn num_half_edges(&self) -> usize {
        self.half_edges.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    pub fn outer_face(&self) -> usize {
        self.outer
    }

    /// Faces other than the outer one, in id order.
    pub fn bounded_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| f != self.outer).collect()
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.endpoints[e]
    }

    pub fn coupling(&self, e: usize) -> f64 {
        self.couplings[e]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn origin(&self, h: usize) -> usize {
        self.half_edges[h].origin
    }

    pub fn dest(&self, h: usize) -> usize {
        self.half_edges[h ^ 1].origin
    }

    pub fn twin(h: usize) -> usize {
        h ^ 1
    }

    pub fn edge_of(h: usize) -> usize {
        h / 2
    }

    pub fn face_left(&self, h: usize) -> usize {
        self.half_edges[h].face
    }

    pub fn face_right(&self, h: usize) -> usize {
        self.half_edges[h ^ 1].face
    }

    pub fn next_ccw(&self, h: usize) -> usize {
        self.half_edges[h].next_vertex
    }

    pub fn next_cw(&self, h: usize) -> usize {
        self.prev_vertex[h]
    }

    /// Outgoing half-edges of `v` in counter-clockwise order.
    pub fn rotation(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(start) = self.first_out[v] {
            let mut h = start;
            loop {
                out.push(h);
                h = self.half_edges[h].next_vertex;
                if h == start {
                    break;
                }
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rotation(v).len()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.rotation(v).into_iter().map(|h| self.dest(h)).collect()
    }

    /// First half-edge from `u` to `v`, if the two are adjacent.
    pub fn find_half_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.rotation(u).into_iter().find(|&h| self.dest(h) == v)
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.vertices.iter().filter(|v| v.boundary).map(|v| v.id).collect()
    }

    /// Vertices touched by the boundary cycle of the outer face.
    pub fn outer_face_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.vertices.len()];
        for &h in &self.faces[self.outer].cycle {
            on[self.origin(h)] = true;
        }
        if self.vertices.len() == 1 {
            on[0] = true;
        }
        (0..on.len()).filter(|&v| on[v]).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertices.len()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Largest degree among vertices not flagged as boundary.
    pub fn max_interior_degree(&self) -> usize {
        (0..self.vertices.len())
            .filter(|&v| !self.vertices[v].boundary)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// V − E + F, counting the outer face.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.endpoints.len() as i64 + self.faces.len() as i64
    }

    /// Structural self-check: twins, rotation permutations, face closure,
    /// positive couplings, and the Euler relation for connected graphs.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (h, he) in self.half_edges.iter().enumerate() {
            if he.twin != (h ^ 1) || self.half_edges[he.twin].twin != h {
                return Err(GraphError::Embedding(format!("twin involution broken at {h}")));
            }
            if self.prev_vertex[he.next_vertex] != h {
                return Err(GraphError::Embedding(format!("rotation not a permutation at {h}")));
            }
            if self.half_edges[he.next_face].face != he.face {
                return Err(GraphError::Embedding(format!("face orbit inconsistent at {h}")));
            }
        }
        for (e, &j) in self.couplings.iter().enumerate() {
            if !(j > 0.0) {
                return Err(GraphError::Coupling { edge: e, value: j });
            }
        }
        if self.is_connected() && self.euler_characteristic() != 2 {
            return Err(GraphError::Embedding(format!(
                "Euler characteristic {} for a connected graph",
                self.euler_characteristic()
            )));
        }
        Ok(())
    }

    /// Average of the positions of the corners of face `f`.
    pub fn face_centroid(&self, f: usize) -> [f64; 2] {
        let cyc = &self.faces[f].cycle;
        if cyc.is_empty() {
            return [0.0, 0.0];
        }
        let mut c = [0.0, 0.0];
        for &h in cyc {
            let p = self.vertices[self.origin(h)].pos;
            c[0] += p[0];
            c[1] += p[1];
        }
        [c[0] / cyc.len() as f64, c[1] / cyc.len() as f64]
    }

    /// The bounded face whose corner average is `p` (within `1e-9`).
    pub fn face_at(&self, p: [f64; 2]) -> Option<usize> {
        (0..self.faces.len()).filter(|&f| f != self.outer).find(|&f| {
            let c = self.face_centroid(f);
            (c[0] - p[0]).abs() < 1e-9 && (c[1] - p[1]).abs() < 1e-9
        })
    }

    /// A copy with every coupling replaced by `f(edge, old)`.
    pub fn map_couplings(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self, GraphError> {
        let mut g = self.clone();
        for e in 0..g.couplings.len() {
            let j = f(e, g.couplings[e]);
            if !(j > 0.0 && j.is_finite()) {
                return Err(GraphError::Coupling { edge: e, value: j });
            }
            g.couplings[e] = j;
        }
        Ok(g)
    }

    /// Rotation lists as plain vectors, e.g. for serialization or surgery.
    pub fn rotations(&self) -> Vec<Vec<usize>> {
        (0..self.vertices.len()).map(|v| self.rotation(v)).collect()
    }

    /// Edge list `(u, v, coupling)` in id order.
    pub fn edge_list(&self) -> Vec<(usize, usize, f64)> {
        self.endpoints.iter().zip(&self.couplings).map(|(&(u, v), &j)| (u, v, j)).collect()
    }

    /// A half-edge on the outer face, if the graph has edges.
    pub fn outer_half_edge(&self) -> Option<usize> {
        self.faces[self.outer].cycle.first().copied()
    }
}
