//! Edge subdivision and the degree-reduction surgery.
//!
//! The square lattice follows the three-step construction for `ℤ²`: split
//! every edge with couplings `3/2` (lower/left part) and `3` (upper/right
//! part), then identify the two midpoints attached to each vertex by its
//! east and north edges. Other lattices use the tree construction: split each
//! edge into `r = 2ℓ` equal parts, `ℓ = ⌈log₂ d⌉`, and identify the new
//! vertices near each original vertex level by level.

use crate::planar::{LatticeKind, OuterFace, PlanarGraph, Vertex};
use crate::GraphError;

/// Replace every edge by a path of `split.len()` edges. The `k`-th new edge,
/// counted from the first endpoint, carries `coupling × split[k]`.
///
/// Original vertices keep their ids; the interior vertices of edge `e` get
/// ids `V + e (k − 1) + t` for `t = 0..k − 1`, and the `t`-th part of edge
/// `e` gets edge id `e k + t`.
pub fn subdivide_edges(g: &PlanarGraph, split: &[f64]) -> Result<PlanarGraph, GraphError> {
    let k = split.len();
    if k == 0 {
        return Err(GraphError::EmptySplit);
    }
    if let Some(&bad) = split.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(GraphError::Coupling { edge: usize::MAX, value: bad });
    }
    let nv = g.num_vertices();
    let ne = g.num_edges();
    let mut vertices = g.vertices().to_vec();
    let mut edges = Vec::with_capacity(ne * k);
    let mid = |e: usize, t: usize| nv + e * (k - 1) + t;
    for e in 0..ne {
        let (u, v) = g.endpoints(e);
        let (pu, pv) = (g.vertex(u).pos, g.vertex(v).pos);
        for t in 1..k {
            let s = t as f64 / k as f64;
            vertices.push(Vertex {
                id: mid(e, t - 1),
                pos: [pu[0] + s * (pv[0] - pu[0]), pu[1] + s * (pv[1] - pu[1])],
                boundary: false,
                mediating: true,
            });
        }
        for (t, &factor) in split.iter().enumerate() {
            let a = if t == 0 { u } else { mid(e, t - 1) };
            let b = if t + 1 == k { v } else { mid(e, t) };
            edges.push((a, b, g.coupling(e) * factor));
        }
    }
    let image = |h: usize| -> usize {
        let e = h / 2;
        if h.is_multiple_of(2) {
            2 * (e * k)
        } else {
            2 * (e * k + k - 1) + 1
        }
    };
    let mut rotations: Vec<Vec<usize>> = (0..nv).map(|v| g.rotation(v).into_iter().map(image).collect()).collect();
    for e in 0..ne {
        for t in 1..k {
            rotations.push(vec![2 * (e * k + t - 1) + 1, 2 * (e * k + t)]);
        }
    }
    let outer = match g.outer_half_edge() {
        Some(h) => OuterFace::LeftOf(image(h)),
        None => OuterFace::ByArea,
    };
    Ok(PlanarGraph::from_rotations(vertices, edges, rotations, outer)?.with_kind(g.kind()))
}

/// Output of `degree_reduce`.
#[derive(Clone, Debug)]
pub struct DegreeReduction {
    /// The subdivided graph on which the merges are expressed.
    pub subdivided: PlanarGraph,
    /// Groups of subdivided-graph vertices identified with each other; each
    /// group defines the sublattice constraint "all values equal".
    pub merges: Vec<Vec<usize>>,
    /// The reduced graph: merged groups contracted, parallel edges combined.
    pub reduced: PlanarGraph,
    /// Reduced-graph id of every subdivided-graph vertex.
    pub vertex_map: Vec<usize>,
    /// Subdivision factors that were applied to every edge.
    pub split: Vec<f64>,
}

impl DegreeReduction {
    fn unchanged(g: &PlanarGraph) -> Self {
        Self {
            subdivided: g.clone(),
            merges: Vec::new(),
            reduced: g.clone(),
            vertex_map: (0..g.num_vertices()).collect(),
            split: vec![1.0],
        }
    }
}

/// Reduce the maximal degree to three by subdivision and vertex merging.
/// Graphs whose interior degree is already at most three come back unchanged.
pub fn degree_reduce(g: &PlanarGraph) -> Result<DegreeReduction, GraphError> {
    let d = g.max_degree();
    if d <= 3 {
        return Ok(DegreeReduction::unchanged(g));
    }
    match g.kind() {
        Some(LatticeKind::Square) => square_reduce(g),
        _ => tree_reduce(g, d),
    }
}

fn square_reduce(g: &PlanarGraph) -> Result<DegreeReduction, GraphError> {
    let split = vec![1.5, 3.0];
    let sub = subdivide_edges(g, &split)?;
    let nv = g.num_vertices();
    // Constructor convention: edges leave their first endpoint towards +x or
    // +y, so the edges whose first endpoint is x are its east and north edges.
    let mut own: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for e in 0..g.num_edges() {
        own[g.endpoints(e).0].push(e);
    }
    let mut merges = Vec::new();
    let mut merged_mid = vec![false; g.num_edges()];
    for edges in &own {
        if edges.len() == 2 {
            merges.push(vec![nv + edges[0], nv + edges[1]]);
            merged_mid[edges[0]] = true;
            merged_mid[edges[1]] = true;
        }
    }
    let mut rs = RotationSystem::from_graph(&sub);
    for group in &merges {
        rs.merge_group(group)?;
    }
    rs.remove_digons();
    // A midpoint left unmerged sits on an edge joining two boundary vertices
    // (top row or right column). Both ends are pinned, so the edge carries no
    // interaction; it is restored as a single edge with the uniform coupling.
    for e in 0..g.num_edges() {
        if !merged_mid[e] {
            rs.smooth(nv + e, 3.0 * g.coupling(e));
        }
    }
    let (reduced, vertex_map) = rs.build(&sub)?;
    Ok(DegreeReduction { subdivided: sub, merges, reduced: reduced.with_kind(None), vertex_map, split })
}

fn tree_reduce(g: &PlanarGraph, d: usize) -> Result<DegreeReduction, GraphError> {
    let ell = (usize::BITS - (d - 1).leading_zeros()) as usize; // ⌈log₂ d⌉
    let r = 2 * ell;
    let split = vec![r as f64; r];
    let sub = subdivide_edges(g, &split)?;
    let nv = g.num_vertices();
    // Vertex t (1-based) along edge e, counted from endpoint `from`.
    let along = |e: usize, from: usize, t: usize| -> usize {
        let (u, _) = g.endpoints(e);
        let idx = if from == u { t } else { r - t };
        nv + e * (r - 1) + idx - 1
    };
    let mut merges: Vec<Vec<usize>> = Vec::new();
    for v in 0..nv {
        let rot = g.rotation(v);
        if rot.len() <= 3 {
            continue;
        }
        // Start the linear order just after the outer-face gap, so that
        // groups are contiguous and never straddle the unbounded face.
        let start = rot.iter().position(|&h| g.face_left(g.next_cw(h)) == g.outer_face()).unwrap_or(0);
        let order: Vec<usize> = (0..rot.len()).map(|i| rot[(start + i) % rot.len()] / 2).collect();
        split_level(&order, 1, ell, &mut |group, level| {
            merges.push(group.iter().map(|&e| along(e, v, level)).collect());
        });
    }
    let mut rs = RotationSystem::from_graph(&sub);
    for group in &merges {
        rs.merge_group(group)?;
    }
    rs.remove_digons();
    let (reduced, vertex_map) = rs.build(&sub)?;
    Ok(DegreeReduction { subdivided: sub, merges, reduced, vertex_map, split })
}

fn split_level(edges: &[usize], level: usize, ell: usize, emit: &mut impl FnMut(&[usize], usize)) {
    if level >= ell || edges.len() <= 1 {
        return;
    }
    let half = edges.len().div_ceil(2);
    for part in [&edges[..half], &edges[half..]] {
        if part.len() >= 2 {
            emit(part, level);
        }
        split_level(part, level + 1, ell, emit);
    }
}

/// Mutable rotation system used while contracting vertices.
struct RotationSystem {
    origin: Vec<usize>,
    alive_edge: Vec<bool>,
    coupling: Vec<f64>,
    rot: Vec<Vec<usize>>,
    rep: Vec<usize>,
    members: Vec<Vec<usize>>,
    outer_hint: Option<usize>,
}

impl RotationSystem {
    fn from_graph(g: &PlanarGraph) -> Self {
        let n = g.num_vertices();
        Self {
            origin: (0..g.num_half_edges()).map(|h| g.origin(h)).collect(),
            alive_edge: vec![true; g.num_edges()],
            coupling: g.couplings().to_vec(),
            rot: g.rotations(),
            rep: (0..n).collect(),
            members: (0..n).map(|v| vec![v]).collect(),
            outer_hint: g.outer_half_edge(),
        }
    }

    fn pos_in_rot(&self, h: usize) -> usize {
        let v = self.origin[h];
        self.rot[v].iter().position(|&x| x == h).expect("half-edge present in rotation")
    }

    fn next_cw(&self, h: usize) -> usize {
        let v = self.origin[h];
        let p = self.pos_in_rot(h);
        let n = self.rot[v].len();
        self.rot[v][(p + n - 1) % n]
    }

    fn next_face(&self, h: usize) -> usize {
        self.next_cw(h ^ 1)
    }

    fn face_cycle(&self, h: usize) -> Vec<usize> {
        let mut out = vec![h];
        let mut x = self.next_face(h);
        while x != h {
            out.push(x);
            x = self.next_face(x);
        }
        out
    }

    fn merge_group(&mut self, group: &[usize]) -> Result<(), GraphError> {
        for w in group.windows(2) {
            let a = self.rep[w[0]];
            let b = self.rep[w[1]];
            if a != b {
                self.contract(a, b)?;
            }
        }
        Ok(())
    }

    /// Identify vertex `b` with vertex `a` through a face they share.
    fn contract(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        if self.rot[a].iter().any(|&h| self.origin[h ^ 1] == b) {
            return Err(GraphError::Embedding(format!("cannot merge adjacent vertices {a} and {b}")));
        }
        let mut found = None;
        'search: for &ha in &self.rot[a] {
            for h in self.face_cycle(ha) {
                if self.origin[h] == b {
                    found = Some((ha, h));
                    break 'search;
                }
            }
        }
        let (ha, hb) = found.ok_or_else(|| GraphError::Embedding(format!("vertices {a} and {b} share no face")))?;
        let la = self.rot[a].len();
        let lb = self.rot[b].len();
        let pa = self.pos_in_rot(ha);
        let pb = self.pos_in_rot(hb);
        // The shared face sits between ha and its ccw successor at a (and the
        // same at b); splice the two cyclic lists across it.
        let mut merged = Vec::with_capacity(la + lb);
        for i in 1..=la {
            merged.push(self.rot[a][(pa + i) % la]);
        }
        for i in 1..=lb {
            merged.push(self.rot[b][(pb + i) % lb]);
        }
        for &h in &self.rot[b] {
            self.origin[h] = a;
        }
        self.rot[a] = merged;
        self.rot[b].clear();
        let moved = std::mem::take(&mut self.members[b]);
        for &m in &moved {
            self.rep[m] = a;
        }
        self.members[a].extend(moved);
        Ok(())
    }

    fn remove_edge(&mut self, e: usize) {
        for h in [2 * e, 2 * e + 1] {
            let v = self.origin[h];
            self.rot[v].retain(|&x| x != h);
        }
        self.alive_edge[e] = false;
        if let Some(o) = self.outer_hint {
            if o / 2 == e {
                self.outer_hint = None;
            }
        }
    }

    /// Collapse two-sided faces formed by parallel edges, adding couplings.
    fn remove_digons(&mut self) {
        loop {
            let mut hit = None;
            for e in 0..self.alive_edge.len() {
                if !self.alive_edge[e] {
                    continue;
                }
                for h in [2 * e, 2 * e + 1] {
                    let n = self.next_face(h);
                    if n != (h ^ 1) && self.next_face(n) == h {
                        hit = Some((e, n / 2));
                        break;
                    }
                }
                if hit.is_some() {
                    break;
                }
            }
            match hit {
                Some((keep, drop)) => {
                    self.coupling[keep] += self.coupling[drop];
                    if self.outer_hint.map(|o| o / 2) == Some(drop) {
                        self.outer_hint = Some(2 * keep);
                    }
                    self.remove_edge(drop);
                }
                None => break,
            }
        }
    }

    /// Replace a degree-two vertex `w` and its two edges by one edge.
    fn smooth(&mut self, w: usize, coupling: f64) {
        let w = self.rep[w];
        if self.rot[w].len() != 2 {
            return;
        }
        let h1 = self.rot[w][0];
        let h2 = self.rot[w][1];
        let t1 = h1 ^ 1; // p → w
        let t2 = h2 ^ 1; // q → w
        let q = self.origin[t2];
        // Re-use edge(h1): t1 becomes p → q and h1 becomes q → p.
        let pos_t2 = self.pos_in_rot(t2);
        self.rot[q][pos_t2] = h1;
        self.origin[h1] = q;
        self.rot[w].clear();
        self.alive_edge[h2 / 2] = false;
        if self.outer_hint.map(|o| o / 2) == Some(h2 / 2) {
            self.outer_hint = Some(t1);
        }
        self.coupling[h1 / 2] = coupling;
    }

    fn build(&self, sub: &PlanarGraph) -> Result<(PlanarGraph, Vec<usize>), GraphError> {
        let n = self.rot.len();
        let alive_vertex: Vec<bool> = (0..n).map(|v| self.rep[v] == v && (!self.rot[v].is_empty() || self.members[v].len() == 1 && sub.degree(v) == 0)).collect();
        let mut new_id = vec![usize::MAX; n];
        let mut vertices = Vec::new();
        for v in 0..n {
            if !alive_vertex[v] {
                continue;
            }
            new_id[v] = vertices.len();
            let ms = &self.members[v];
            let mut pos = [0.0, 0.0];
            for &m in ms {
                pos[0] += sub.vertex(m).pos[0] / ms.len() as f64;
                pos[1] += sub.vertex(m).pos[1] / ms.len() as f64;
            }
            let base = sub.vertex(v);
            vertices.push(Vertex {
                id: new_id[v],
                pos,
                boundary: ms.len() == 1 && base.boundary,
                mediating: ms.len() > 1 || base.mediating,
            });
        }
        let mut edge_id = vec![usize::MAX; self.alive_edge.len()];
        let mut edges = Vec::new();
        for e in 0..self.alive_edge.len() {
            if self.alive_edge[e] {
                edge_id[e] = edges.len();
                edges.push((new_id[self.origin[2 * e]], new_id[self.origin[2 * e + 1]], self.coupling[e]));
            }
        }
        let map_h = |h: usize| 2 * edge_id[h / 2] + h % 2;
        let rotations: Vec<Vec<usize>> = (0..n)
            .filter(|&v| alive_vertex[v])
            .map(|v| self.rot[v].iter().map(|&h| map_h(h)).collect())
            .collect();
        let outer = match self.outer_hint {
            Some(h) if self.alive_edge[h / 2] => OuterFace::LeftOf(map_h(h)),
            _ => OuterFace::ByArea,
        };
        let g = PlanarGraph::from_rotations(vertices, edges, rotations, outer)?;
        let vertex_map = (0..n).map(|v| new_id[self.rep[v]]).collect();
        Ok((g, vertex_map))
    }
}
