//! Level lines of integer height functions on the faces of a planar graph.
//!
//! A `q`-line, `q ∈ ℤ + ½`, runs along the primal half-edge `h` exactly when
//! the face on the right of `h` is below `q` and the face on the left is
//! above it. At a vertex the incoming and outgoing `q`-lines alternate in
//! the rotation, and each incoming line leaves through the first outgoing
//! one met when turning counter-clockwise from the reversed incoming edge,
//! i.e. it takes the sharpest right turn available. The resulting contours
//! never cross.
//!
//! On top of the contour decomposition sit loop counts around a face, the
//! exploration process that searches for a `q`-path closing a fixed path
//! into a loop, and the quadrant counting that compares the two.

mod explore;
mod levels;
mod quadrant;

pub use explore::{explore, ExplorationResult, QRule};
pub use levels::{
    count_loops, crossing_counts, extract_level_lines, levels_of, loop_counts, LevelLineSet, LevelLoop, LoopCounts,
    Orientation,
};
pub use quadrant::{quadrant_event_sum, quadrant_pairs, QuadrantPair};

use thiserror::Error;
use zgf_graph::{DualGraph, PlanarGraph};


#[derive(Debug, Error)]
pub enum LoopsError {
    #[error("level {0} is not a half-integer")]
    NotHalfInteger(f64),
    #[error("face {0} is the boundary face")]
    BoundaryFace(usize),
    #[error("malformed path: {0}")]
    Path(String),
    #[error("bad starting edge: {0}")]
    Edge(String),
    #[error("face {0} is too close to the boundary for the quadrant construction")]
    TooClose(usize),
    #[error("height configuration has {got} faces, graph has {expected}")]
    Size { got: usize, expected: usize },
}

pub(crate) fn check_level(q: f64) -> Result<(), LoopsError> {
    if q.is_finite() && (2.0 * q).fract() == 0.0 && (2.0 * q).rem_euclid(2.0) == 1.0 {
        Ok(())
    } else {
        Err(LoopsError::NotHalfInteger(q))
    }
}

pub(crate) fn check_size(dg: &DualGraph, h: &zgf_exact::HeightConfig) -> Result<(), LoopsError> {
    if h.num_faces() != dg.num_faces() {
        return Err(LoopsError::Size { got: h.num_faces(), expected: dg.num_faces() });
    }
    Ok(())
}

/// Orientation and inside of the closed curve traced by the half-edge
/// cycle `cycle`, which may touch itself at vertices but never crosses.
///
/// The faces on the left of the cycle are flooded through edges off the
/// curve, and likewise the faces on the right; the side reaching the outer
/// face is the outside. Flooding from the curve rather than from the outer
/// face keeps pockets that hang off a pinch vertex on the correct side.
pub(crate) fn curve_sides(dg: &DualGraph, cycle: &[usize]) -> (Orientation, Vec<bool>) {
    let g = dg.primal();
    let mut wall = vec![false; g.num_edges()];
    for &h in cycle {
        wall[PlanarGraph::edge_of(h)] = true;
    }
    let mut adj = vec![Vec::new(); dg.num_faces()];
    for d in dg.edges() {
        if !wall[d.primal_edge] && d.left != d.right {
            adj[d.left].push(d.right);
            adj[d.right].push(d.left);
        }
    }
    let flood = |seeds: Vec<usize>| {
        let mut on = vec![false; dg.num_faces()];
        let mut stack = Vec::new();
        for f in seeds {
            if !std::mem::replace(&mut on[f], true) {
                stack.push(f);
            }
        }
        while let Some(f) = stack.pop() {
            for &w in &adj[f] {
                if !std::mem::replace(&mut on[w], true) {
                    stack.push(w);
                }
            }
        }
        on
    };
    let left = flood(cycle.iter().map(|&h| g.face_left(h)).collect());
    let right = flood(cycle.iter().map(|&h| g.face_right(h)).collect());
    if right[dg.outer_face()] {
        (Orientation::Positive, left)
    } else {
        (Orientation::Negative, right)
    }
}

/// Half-edges along the vertex path `path`, which must be simple.
pub(crate) fn path_half_edges(g: &PlanarGraph, path: &[usize]) -> Result<Vec<usize>, LoopsError> {
    let mut seen = vec![false; g.num_vertices()];
    for &v in path {
        if v >= g.num_vertices() {
            return Err(LoopsError::Path(format!("no vertex {v}")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(LoopsError::Path(format!("vertex {v} visited twice")));
        }
    }
    path.windows(2)
        .map(|w| {
            g.find_half_edge(w[0], w[1])
                .ok_or_else(|| LoopsError::Path(format!("{} and {} are not adjacent", w[0], w[1])))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integers() {
        assert!(check_level(0.5).is_ok());
        assert!(check_level(-3.5).is_ok());
        assert!(check_level(1.0).is_err());
        assert!(check_level(0.25).is_err());
        assert!(check_level(f64::NAN).is_err());
    }
}
