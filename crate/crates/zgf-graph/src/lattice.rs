//! Finite boxes cut from the square, triangular and hexagonal lattices.
//!
//! Every constructor orients its edges in a fixed lattice direction (for the
//! square box: towards +x or +y), which the surgery relies on to tell the
//! lower/left part of an edge from the upper/right part.

use crate::planar::{LatticeKind, PlanarGraph, Vertex};
use crate::GraphError;

/// The box `[-L, L]²` of `ℤ²` with nearest-neighbour edges of coupling 1.
pub fn build_square_lattice(l: usize) -> PlanarGraph {
    let li = l as i64;
    let side = 2 * l + 1;
    let id = |i: i64, j: i64| ((j + li) as usize) * side + (i + li) as usize;
    let mut vertices = Vec::with_capacity(side * side);
    for j in -li..=li {
        for i in -li..=li {
            vertices.push(Vertex {
                id: id(i, j),
                pos: [i as f64, j as f64],
                boundary: i.abs() == li || j.abs() == li,
                mediating: false,
            });
        }
    }
    let mut edges = Vec::new();
    for j in -li..=li {
        for i in -li..=li {
            if i < li {
                edges.push((id(i, j), id(i + 1, j), 1.0));
            }
            if j < li {
                edges.push((id(i, j), id(i, j + 1), 1.0));
            }
        }
    }
    PlanarGraph::from_geometry(vertices, edges)
        .expect("square box is a valid straight-line embedding")
        .with_kind(Some(LatticeKind::Square))
}

/// Vertex id of the lattice point `(i, j)` in `build_square_lattice(l)`.
pub fn square_vertex(l: usize, i: i64, j: i64) -> Option<usize> {
    let li = l as i64;
    if i.abs() > li || j.abs() > li {
        return None;
    }
    Some(((j + li) as usize) * (2 * l + 1) + (i + li) as usize)
}

pub fn build_periodic_lattice(kind: LatticeKind, l: usize) -> Result<PlanarGraph, GraphError> {
    match kind {
        LatticeKind::Square => Ok(build_square_lattice(l)),
        LatticeKind::Triangular => Ok(triangular_box(l)),
        LatticeKind::Hexagonal => Ok(hexagonal_box(l)),
    }
}

/// Parses the lattice names used on the command line.
pub fn parse_kind(name: &str) -> Result<LatticeKind, GraphError> {
    match name {
        "square" => Ok(LatticeKind::Square),
        "triangular" => Ok(LatticeKind::Triangular),
        "hexagonal" | "honeycomb" => Ok(LatticeKind::Hexagonal),
        other => Err(GraphError::UnsupportedKind(other.to_string())),
    }
}

/// Rhombus `{i a₁ + j a₂ : |i|, |j| ≤ L}` of the triangular lattice with
/// `a₁ = (1, 0)` and `a₂ = (1/2, √3/2)`.
fn triangular_box(l: usize) -> PlanarGraph {
    let li = l as i64;
    let side = 2 * l + 1;
    let id = |i: i64, j: i64| ((j + li) as usize) * side + (i + li) as usize;
    let h = 3f64.sqrt() / 2.0;
    let mut vertices = Vec::new();
    for j in -li..=li {
        for i in -li..=li {
            vertices.push(Vertex {
                id: id(i, j),
                pos: [i as f64 + 0.5 * j as f64, h * j as f64],
                boundary: i.abs() == li || j.abs() == li,
                mediating: false,
            });
        }
    }
    let mut edges = Vec::new();
    for j in -li..=li {
        for i in -li..=li {
            if i < li {
                edges.push((id(i, j), id(i + 1, j), 1.0));
            }
            if j < li {
                edges.push((id(i, j), id(i, j + 1), 1.0));
                if i > -li {
                    edges.push((id(i, j), id(i - 1, j + 1), 1.0));
                }
            }
        }
    }
    PlanarGraph::from_geometry(vertices, edges)
        .expect("triangular box is a valid straight-line embedding")
        .with_kind(Some(LatticeKind::Triangular))
}

/// Brick-wall drawing of the honeycomb: all horizontal edges of the box,
/// vertical edges only where `i + j` is even, leaves pruned.
fn hexagonal_box(l: usize) -> PlanarGraph {
    let li = l as i64;
    let side = (2 * l + 1) as i64;
    let mut present = vec![true; (side * side) as usize];
    let idx = |i: i64, j: i64| ((j + li) * side + (i + li)) as usize;
    let mut raw_edges: Vec<(i64, i64, i64, i64)> = Vec::new();
    for j in -li..=li {
        for i in -li..=li {
            if i < li {
                raw_edges.push((i, j, i + 1, j));
            }
            if j < li && (i + j).rem_euclid(2) == 0 {
                raw_edges.push((i, j, i, j + 1));
            }
        }
    }
    // Prune degree-one vertices so that every edge borders two distinct faces.
    loop {
        let mut deg = vec![0usize; present.len()];
        for &(a, b, c, d) in &raw_edges {
            deg[idx(a, b)] += 1;
            deg[idx(c, d)] += 1;
        }
        let leaves: Vec<usize> = (0..present.len()).filter(|&v| present[v] && deg[v] == 1).collect();
        if leaves.is_empty() || raw_edges.len() <= 1 {
            break;
        }
        for v in leaves {
            present[v] = false;
        }
        raw_edges.retain(|&(a, b, c, d)| present[idx(a, b)] && present[idx(c, d)]);
    }
    let mut new_id = vec![usize::MAX; present.len()];
    let mut vertices = Vec::new();
    for j in -li..=li {
        for i in -li..=li {
            if present[idx(i, j)] {
                new_id[idx(i, j)] = vertices.len();
                vertices.push(Vertex {
                    id: vertices.len(),
                    pos: [i as f64, j as f64],
                    boundary: false,
                    mediating: false,
                });
            }
        }
    }
    let edges: Vec<(usize, usize, f64)> = raw_edges
        .iter()
        .map(|&(a, b, c, d)| (new_id[idx(a, b)], new_id[idx(c, d)], 1.0))
        .collect();
    let g = PlanarGraph::from_geometry(vertices.clone(), edges.clone())
        .expect("brick wall is a valid straight-line embedding");
    let on_outer = g.outer_face_vertices();
    for v in on_outer {
        vertices[v].boundary = true;
    }
    PlanarGraph::from_geometry(vertices, edges)
        .expect("brick wall is a valid straight-line embedding")
        .with_kind(Some(LatticeKind::Hexagonal))
}
