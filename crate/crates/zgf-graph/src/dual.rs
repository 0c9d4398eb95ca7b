//! Dual graphs under Dirichlet conventions.
//!
//! Each bounded face of the primal graph becomes an interior dual vertex and
//! the unbounded face becomes the single boundary class, pinned to zero by the
//! height models. Dual vertices keep the primal face ids, so a height field is
//! simply a vector indexed by face id.

use crate::planar::{OuterFace, PlanarGraph, Vertex};
use crate::GraphError;

/// The dual edge crossing one primal edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualEdge {
    pub primal_edge: usize,
    /// Face to the left of the primal half-edge `2 * primal_edge`.
    pub left: usize,
    /// Face to the right of the same half-edge.
    pub right: usize,
    pub coupling: f64,
}

#[derive(Clone, Debug)]
pub struct DualGraph {
    primal: PlanarGraph,
    interior: Vec<usize>,
    cross: Vec<DualEdge>,
}

pub fn dual(g: &PlanarGraph) -> Result<DualGraph, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    g.validate()?;
    let cross = (0..g.num_edges())
        .map(|e| DualEdge {
            primal_edge: e,
            left: g.face_left(2 * e),
            right: g.face_right(2 * e),
            coupling: g.coupling(e),
        })
        .collect();
    Ok(DualGraph { primal: g.clone(), interior: g.bounded_faces(), cross })
}

impl DualGraph {
    pub fn primal(&self) -> &PlanarGraph {
        &self.primal
    }

    /// Total number of dual vertices (faces), including the boundary class.
    pub fn num_faces(&self) -> usize {
        self.primal.num_faces()
    }

    /// Interior dual vertices (bounded faces), in id order.
    pub fn interior_faces(&self) -> &[usize] {
        &self.interior
    }

    /// The boundary class; a single face under the merged-outer convention.
    pub fn boundary_faces(&self) -> Vec<usize> {
        vec![self.primal.outer_face()]
    }

    pub fn outer_face(&self) -> usize {
        self.primal.outer_face()
    }

    pub fn is_boundary(&self, f: usize) -> bool {
        f == self.primal.outer_face()
    }

    /// Dual edges indexed by primal edge id.
    pub fn edges(&self) -> &[DualEdge] {
        &self.cross
    }

    pub fn num_edges(&self) -> usize {
        self.cross.len()
    }

    /// The dual edge crossing primal edge `e`.
    pub fn crossing(&self, e: usize) -> &DualEdge {
        &self.cross[e]
    }

    /// Dual neighbours of face `f`, one entry per crossing edge.
    pub fn neighbors(&self, f: usize) -> Vec<usize> {
        self.primal
            .face(f)
            .cycle
            .iter()
            .map(|&h| self.primal.face_right(h))
            .collect()
    }

    /// The interior structure as a planar graph in its own right: one vertex
    /// per bounded face (placed at the face centroid), edges between bounded
    /// faces, rotation inherited from the face boundary order. Returns the
    /// graph and, for each of its vertices, the primal face id.
    pub fn interior_planar(&self) -> Result<(PlanarGraph, Vec<usize>), GraphError> {
        let g = &self.primal;
        let mut vid = vec![usize::MAX; g.num_faces()];
        let mut vertices = Vec::new();
        for &f in &self.interior {
            vid[f] = vertices.len();
            vertices.push(Vertex {
                id: vertices.len(),
                pos: g.face_centroid(f),
                boundary: false,
                mediating: false,
            });
        }
        let mut edges = Vec::new();
        let mut dual_half = vec![usize::MAX; g.num_half_edges()];
        for d in &self.cross {
            if self.is_boundary(d.left) || self.is_boundary(d.right) || d.left == d.right {
                continue;
            }
            let k = edges.len();
            // Dual half-edge 2k runs from the right face to the left face.
            dual_half[2 * d.primal_edge + 1] = 2 * k;
            dual_half[2 * d.primal_edge] = 2 * k + 1;
            edges.push((vid[d.right], vid[d.left], d.coupling));
        }
        let mut rotations = vec![Vec::new(); vertices.len()];
        for &f in &self.interior {
            for &h in &g.face(f).cycle {
                // h has f on its left; the dual half-edge leaving f crosses h
                // towards the face on its right.
                let dh = dual_half[h];
                if dh != usize::MAX {
                    rotations[vid[f]].push(dh);
                }
            }
        }
        let mut pg = PlanarGraph::from_rotations(vertices, edges, rotations, OuterFace::ByArea)?;
        let on_outer = pg.outer_face_vertices();
        let mut verts = pg.vertices().to_vec();
        for v in on_outer {
            verts[v].boundary = true;
        }
        pg = PlanarGraph::from_rotations(verts, pg.edge_list(), pg.rotations(), OuterFace::ByArea)?;
        Ok((pg, self.interior.clone()))
    }
}
