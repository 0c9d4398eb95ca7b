use serde::{Deserialize, Serialize};
use zgf_exact::HeightConfig;
use zgf_graph::{DualGraph, PlanarGraph};

use crate::levels::Orientation;
use crate::{check_level, check_size, curve_sides, path_half_edges, LoopsError};

/// How the level of the searched path is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QRule {
    Fixed(f64),
    /// Try every level between the two faces along the starting edge,
    /// `n_{x⁻} + ½, …, n_{x⁺} - ½`, by increasing `|q|` (positive first on
    /// ties), and keep the first that succeeds. Depends on the configuration
    /// only through what the explorations reveal.
    Argmax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationResult {
    pub success: bool,
    /// Half-edges of the `q`-path found from `x`, in order. On failure, the
    /// part traced before the exploration stopped.
    pub kappa: Vec<usize>,
    /// Revealed faces below `q_used`, ascending.
    pub low_set: Vec<usize>,
    /// Revealed faces above `q_used`, ascending.
    pub high_set: Vec<usize>,
    pub q_used: f64,
    /// `(face, height)` in the order the faces were looked at.
    pub revealed: Vec<(usize, i64)>,
}

struct Reveal<'a> {
    h: &'a HeightConfig,
    seen: Vec<bool>,
    order: Vec<(usize, i64)>,
}

impl Reveal<'_> {
    fn get(&mut self, f: usize) -> i64 {
        let n = self.h.get(f);
        if !std::mem::replace(&mut self.seen[f], true) {
            self.order.push((f, n));
        }
        n
    }
}

struct Setup {
    gamma_half_edges: Vec<usize>,
    on_gamma: Vec<bool>,
    y: usize,
    e: usize,
}

fn setup(g: &PlanarGraph, gamma: &[usize], e: (usize, usize)) -> Result<Setup, LoopsError> {
    if gamma.is_empty() {
        return Err(LoopsError::Path("empty path".into()));
    }
    let gamma_half_edges = path_half_edges(g, gamma)?;
    let x = *gamma.last().unwrap();
    if e.0 != x {
        return Err(LoopsError::Edge(format!("starting edge begins at {} but the path ends at {x}", e.0)));
    }
    let mut on_gamma = vec![false; g.num_vertices()];
    for &v in gamma {
        on_gamma[v] = true;
    }
    if e.1 >= g.num_vertices() || on_gamma[e.1] {
        return Err(LoopsError::Edge(format!("edge ({}, {}) meets the path", e.0, e.1)));
    }
    let e_half =
        g.find_half_edge(e.0, e.1).ok_or_else(|| LoopsError::Edge(format!("{} and {} are not adjacent", e.0, e.1)))?;
    Ok(Setup { gamma_half_edges, on_gamma, y: gamma[0], e: e_half })
}

/// One exploration at a fixed level. Returns success and the traced path.
fn run(g: &PlanarGraph, dg: &DualGraph, s: &Setup, q: f64, rev: &mut Reveal) -> (bool, Vec<usize>) {
    let up = rev.get(g.face_left(s.e)) as f64;
    let down = rev.get(g.face_right(s.e)) as f64;
    if down > q || up < q {
        return (false, Vec::new());
    }
    let mut kappa = vec![s.e];
    let mut cur = s.e;
    // A q-line is a closed curve through x, so the walk meets the path
    // within one lap; the bound only guards against malformed input.
    for _ in 0..g.num_half_edges() {
        let w = g.dest(cur);
        if s.on_gamma[w] {
            return (w == s.y && closes_correctly(dg, s, &kappa, q), kappa);
        }
        let back = PlanarGraph::twin(cur);
        let mut t = g.next_ccw(back);
        let mut found = None;
        while t != back {
            let left = rev.get(g.face_left(t)) as f64;
            // The right face of t was looked at one step earlier in the scan.
            let right = rev.get(g.face_right(t)) as f64;
            if right < q && left > q {
                found = Some(t);
                break;
            }
            t = g.next_ccw(t);
        }
        match found {
            Some(t) => {
                kappa.push(t);
                cur = t;
            }
            None => return (false, kappa),
        }
    }
    (false, kappa)
}

/// Whether `γ ∘ κ` closes with orientation `sgn(q)`. The curve is simple
/// as drawn: `κ` meets `γ` only at its ends, and a `q`-line may touch
/// itself at a vertex but is routed around it without crossing.
fn closes_correctly(dg: &DualGraph, s: &Setup, kappa: &[usize], q: f64) -> bool {
    let cycle: Vec<usize> = s.gamma_half_edges.iter().chain(kappa).copied().collect();
    curve_sides(dg, &cycle).0 == Orientation::of_sign(q)
}

/// Searches for a `q`-path starting with the oriented edge `e = (x, x')`
/// that ends at `y` and closes the path `gamma` (from `y` to `x`) into a
/// simple loop of orientation `sgn(q)`.
///
/// The faces on both sides of `e` are looked at first; if they do not
/// straddle `q` the search stops. Otherwise, at each vertex reached, the
/// surrounding faces are looked at counter-clockwise from the one right of
/// the incoming edge until an outgoing edge with height below `q` on its
/// right and above `q` on its left turns up. The walk stops on reaching a
/// vertex of `gamma`.
pub fn explore(
    dg: &DualGraph,
    h: &HeightConfig,
    gamma: &[usize],
    e: (usize, usize),
    rule: QRule,
) -> Result<ExplorationResult, LoopsError> {
    check_size(dg, h)?;
    let g = dg.primal();
    let s = setup(g, gamma, e)?;
    let mut rev = Reveal { h, seen: vec![false; dg.num_faces()], order: Vec::new() };
    let (success, kappa, q_used) = match rule {
        QRule::Fixed(q) => {
            check_level(q)?;
            let (ok, k) = run(g, dg, &s, q, &mut rev);
            (ok, k, q)
        }
        QRule::Argmax => {
            let up = rev.get(g.face_left(s.e));
            let down = rev.get(g.face_right(s.e));
            let mut candidates: Vec<f64> = (down..up).map(|n| n as f64 + 0.5).collect();
            candidates.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(b.total_cmp(a)));
            let mut outcome = (false, Vec::new(), candidates.first().copied().unwrap_or(down as f64 + 0.5));
            for q in candidates {
                let (ok, k) = run(g, dg, &s, q, &mut rev);
                if ok {
                    outcome = (true, k, q);
                    break;
                }
            }
            outcome
        }
    };
    let mut low_set: Vec<usize> = rev.order.iter().filter(|&&(_, n)| (n as f64) < q_used).map(|&(f, _)| f).collect();
    let mut high_set: Vec<usize> =
        rev.order.iter().filter(|&&(_, n)| (n as f64) > q_used).map(|&(f, _)| f).collect();
    low_set.sort_unstable();
    high_set.sort_unstable();
    Ok(ExplorationResult { success, kappa, low_set, high_set, q_used, revealed: rev.order })
}
