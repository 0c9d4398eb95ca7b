use serde::{Deserialize, Serialize};
use zgf_exact::HeightConfig;
use zgf_graph::{DualGraph, PlanarGraph};

use crate::{check_level, check_size, curve_sides, LoopsError};

/// Counter-clockwise loops are positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    /// The orientation whose sign matches `q`.
    pub fn of_sign(q: f64) -> Self {
        if q > 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        }
    }
}

/// A closed `q`-contour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelLoop {
    /// Half-edges in traversal order; the last one ends where the first starts.
    pub half_edges: Vec<usize>,
    pub orientation: Orientation,
    /// Faces enclosed by the loop, ascending.
    pub interior: Vec<usize>,
}

impl LevelLoop {
    pub fn surrounds(&self, f: usize) -> bool {
        self.interior.binary_search(&f).is_ok()
    }
}

/// Every `q`-contour of one configuration at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelLineSet {
    pub q: f64,
    /// Every half-edge carrying a `q`-line, ascending.
    pub segments: Vec<usize>,
    pub loops: Vec<LevelLoop>,
    /// Contours that do not close up. With the boundary held at a single
    /// height every contour closes, so this is empty for Dirichlet boxes.
    pub open_lines: Vec<Vec<usize>>,
}

impl LevelLineSet {
    /// Number of `q`-lines through primal edge `e` (0 or 1 at one level).
    pub fn crossings(&self, e: usize) -> usize {
        self.segments.iter().filter(|&&h| PlanarGraph::edge_of(h) == e).count()
    }

    /// Loops of orientation `eta` around face `f`.
    pub fn loops_around(&self, f: usize, eta: Orientation) -> usize {
        self.loops.iter().filter(|l| l.orientation == eta && l.surrounds(f)).count()
    }

    /// Every contour as a polyline through the vertex positions, for
    /// plotting. Loops repeat their first point at the end.
    pub fn polylines(&self, g: &PlanarGraph) -> Vec<Vec<[f64; 2]>> {
        let line = |hs: &[usize]| {
            let mut pts: Vec<[f64; 2]> = hs.iter().map(|&h| g.vertex(g.origin(h)).pos).collect();
            if let Some(&last) = hs.last() {
                pts.push(g.vertex(g.dest(last)).pos);
            }
            pts
        };
        self.loops.iter().map(|l| line(&l.half_edges)).chain(self.open_lines.iter().map(|o| line(o))).collect()
    }

    /// `{"q": .., "polylines": [[[x, y], ..], ..]}`.
    pub fn polylines_json(&self, g: &PlanarGraph) -> String {
        serde_json::json!({ "q": self.q, "polylines": self.polylines(g) }).to_string()
    }
}

fn carries(g: &PlanarGraph, h: &HeightConfig, half: usize, q: f64) -> bool {
    (h.get(g.face_right(half)) as f64) < q && (h.get(g.face_left(half)) as f64) > q
}

/// Where the line along `half` continues: the first `q`-carrying half-edge
/// leaving `dest(half)` counter-clockwise after the reversed edge.
fn successor(g: &PlanarGraph, h: &HeightConfig, half: usize, q: f64) -> Option<usize> {
    let back = PlanarGraph::twin(half);
    let mut t = g.next_ccw(back);
    while t != back {
        if carries(g, h, t, q) {
            return Some(t);
        }
        t = g.next_ccw(t);
    }
    None
}

/// The contour decomposition of `h` at level `q`.
pub fn extract_level_lines(dg: &DualGraph, h: &HeightConfig, q: f64) -> Result<LevelLineSet, LoopsError> {
    check_level(q)?;
    check_size(dg, h)?;
    let g = dg.primal();
    let segments: Vec<usize> = (0..g.num_half_edges()).filter(|&s| carries(g, h, s, q)).collect();
    let mut next = vec![None; g.num_half_edges()];
    let mut has_pred = vec![false; g.num_half_edges()];
    for &s in &segments {
        next[s] = successor(g, h, s, q);
        if let Some(t) = next[s] {
            has_pred[t] = true;
        }
    }
    let mut used = vec![false; g.num_half_edges()];
    let mut open_lines = Vec::new();
    for &s in &segments {
        if !has_pred[s] && !used[s] {
            let mut line = Vec::new();
            let mut cur = Some(s);
            while let Some(c) = cur.filter(|&c| !used[c]) {
                used[c] = true;
                line.push(c);
                cur = next[c];
            }
            open_lines.push(line);
        }
    }
    let mut loops = Vec::new();
    for &s in &segments {
        if used[s] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut cur = s;
        while !used[cur] {
            used[cur] = true;
            cycle.push(cur);
            cur = next[cur].expect("every q-line into a vertex has a way out");
        }
        let (orientation, inside) = curve_sides(dg, &cycle);
        let interior = (0..inside.len()).filter(|&f| inside[f]).collect();
        loops.push(LevelLoop { half_edges: cycle, orientation, interior });
    }
    Ok(LevelLineSet { q, segments, loops, open_lines })
}

/// Every level `q ∈ ℤ + ½` strictly between the smallest and largest height
/// of `h`, ascending.
pub fn levels_of(h: &HeightConfig) -> Vec<f64> {
    let lo = h.values().iter().copied().min().unwrap_or(0);
    let hi = h.values().iter().copied().max().unwrap_or(0);
    (lo..hi).map(|n| n as f64 + 0.5).collect()
}

/// `𝒩^η_q(f)`: loops at level `q` of orientation `eta` around `f`.
pub fn count_loops(
    dg: &DualGraph,
    h: &HeightConfig,
    f: usize,
    q: f64,
    eta: Orientation,
) -> Result<usize, LoopsError> {
    if f >= dg.num_faces() || f == dg.outer_face() {
        return Err(LoopsError::BoundaryFace(f));
    }
    Ok(extract_level_lines(dg, h, q)?.loops_around(f, eta))
}

/// `𝒩^{η,r}(f)` for the four sign combinations: `pp` counts positive
/// loops at positive levels, `pm` positive loops at negative levels, and so
/// on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopCounts {
    pub pp: usize,
    pub pm: usize,
    pub mp: usize,
    pub mm: usize,
}

impl LoopCounts {
    /// `𝒩^{+,+}(f) + 𝒩^{−,−}(f)`, which dominates `|n_f|`.
    pub fn aligned(&self) -> usize {
        self.pp + self.mm
    }
}

pub fn loop_counts(dg: &DualGraph, h: &HeightConfig, f: usize) -> Result<LoopCounts, LoopsError> {
    if f >= dg.num_faces() || f == dg.outer_face() {
        return Err(LoopsError::BoundaryFace(f));
    }
    let mut c = LoopCounts::default();
    for q in levels_of(h) {
        let set = extract_level_lines(dg, h, q)?;
        let plus = set.loops_around(f, Orientation::Positive);
        let minus = set.loops_around(f, Orientation::Negative);
        if q > 0.0 {
            c.pp += plus;
            c.mp += minus;
        } else {
            c.pm += plus;
            c.mm += minus;
        }
    }
    Ok(c)
}

/// Number of contour lines through every primal edge, summed over all
/// levels. Equals `|n_left - n_right|` edge by edge.
pub fn crossing_counts(dg: &DualGraph, h: &HeightConfig) -> Result<Vec<usize>, LoopsError> {
    let mut counts = vec![0; dg.primal().num_edges()];
    for q in levels_of(h) {
        for s in extract_level_lines(dg, h, q)?.segments {
            counts[PlanarGraph::edge_of(s)] += 1;
        }
    }
    Ok(counts)
}
