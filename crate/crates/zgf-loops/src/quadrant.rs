//! Four quadrants with corners at the corners of a unit face `f₀`, so that
//! their intersection is `f₀`. A positive `q`-loop around `f₀` enters the
//! first quadrant through its horizontal side, going up, and meets the
//! vertical side later; the stretch in between closes the boundary path of
//! the quadrant into a loop. The other quadrants are the same construction
//! turned by quarter turns about the centre of `f₀`; negative levels swap
//! the roles of the two sides.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use zgf_exact::HeightConfig;
use zgf_graph::DualGraph;

use crate::explore::{explore, QRule};
use crate::levels::{count_loops, Orientation};
use crate::{check_level, check_size, LoopsError};

/// One `(x, y)` pair on the sides of a quadrant with its boundary path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrantPair {
    /// 0 to 3, counter-clockwise starting from the upper-right quadrant.
    pub quadrant: usize,
    pub x: usize,
    pub y: usize,
    /// Vertex path from `y` along the sides of the quadrant to `x`.
    pub gamma: Vec<usize>,
    /// First step from `x`, into the quadrant.
    pub e: (usize, usize),
}

fn rotate(v: [i64; 2], k: usize) -> [i64; 2] {
    (0..k).fold(v, |[a, b], _| [-b, a])
}

/// Lattice coordinates of a square-lattice embedding, `None` if some vertex
/// does not sit on an integer point.
fn coordinates(dg: &DualGraph) -> Option<HashMap<[i64; 2], usize>> {
    let mut map = HashMap::new();
    for v in dg.primal().vertices() {
        let [x, y] = v.pos;
        if (x - x.round()).abs() > 1e-9 || (y - y.round()).abs() > 1e-9 {
            return None;
        }
        map.insert([x.round() as i64, y.round() as i64], v.id);
    }
    Some(map)
}

/// All pairs of the four quadrants around `f0` for levels of sign `sign`.
pub fn quadrant_pairs(dg: &DualGraph, f0: usize, sign: Orientation) -> Result<Vec<QuadrantPair>, LoopsError> {
    let g = dg.primal();
    if f0 >= dg.num_faces() || f0 == dg.outer_face() {
        return Err(LoopsError::BoundaryFace(f0));
    }
    let coords = coordinates(dg).ok_or(LoopsError::TooClose(f0))?;
    let c = g.face_centroid(f0);
    if g.face(f0).cycle.len() != 4 {
        return Err(LoopsError::TooClose(f0));
    }
    // Twice the centre, to stay in integers.
    let c2 = [(2.0 * c[0]).round() as i64, (2.0 * c[1]).round() as i64];
    let at = |p: [i64; 2]| coords.get(&p).copied();
    let mut pairs = Vec::new();
    for quadrant in 0..4 {
        let off = rotate([-1, -1], quadrant);
        let corner = [(c2[0] + off[0]) / 2, (c2[1] + off[1]) / 2];
        let corner_v = at(corner).ok_or(LoopsError::TooClose(f0))?;
        if g.vertex(corner_v).boundary {
            return Err(LoopsError::TooClose(f0));
        }
        let hdir = rotate([1, 0], quadrant);
        let vdir = rotate([0, 1], quadrant);
        // Positive levels start on the horizontal side and end on the
        // vertical one; negative levels the other way round.
        let (start_dir, end_dir) = match sign {
            Orientation::Positive => (hdir, vdir),
            Orientation::Negative => (vdir, hdir),
        };
        let ray = |dir: [i64; 2], k: i64| [corner[0] + k * dir[0], corner[1] + k * dir[1]];
        for i in 1.. {
            let Some(x) = at(ray(start_dir, i)) else { break };
            let Some(x_next) = at([ray(start_dir, i)[0] + end_dir[0], ray(start_dir, i)[1] + end_dir[1]]) else {
                continue;
            };
            for j in 0.. {
                let Some(y) = at(ray(end_dir, j)) else { break };
                let mut gamma: Vec<usize> = (0..=j).rev().map(|k| at(ray(end_dir, k)).unwrap()).collect();
                gamma.extend((1..=i).map(|k| at(ray(start_dir, k)).unwrap()));
                pairs.push(QuadrantPair { quadrant, x, y, gamma, e: (x, x_next) });
            }
        }
    }
    Ok(pairs)
}

/// `(4 · 𝒩^{sgn q}_q(f₀), number of quadrant pairs whose event holds at
/// level q)`. The first never exceeds the second.
pub fn quadrant_event_sum(dg: &DualGraph, h: &HeightConfig, f0: usize, q: f64) -> Result<(usize, usize), LoopsError> {
    check_level(q)?;
    check_size(dg, h)?;
    let sign = Orientation::of_sign(q);
    let lhs = 4 * count_loops(dg, h, f0, q, sign)?;
    let mut rhs = 0;
    for p in quadrant_pairs(dg, f0, sign)? {
        if explore(dg, h, &p.gamma, p.e, QRule::Fixed(q))?.success {
            rhs += 1;
        }
    }
    Ok((lhs, rhs))
}
