//! JSON form of a planar graph: vertices, edges, rotation lists.

use serde::{Deserialize, Serialize};

use crate::planar::{LatticeKind, OuterFace, PlanarGraph, Vertex};
use crate::GraphError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexJson {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub boundary: bool,
    #[serde(default)]
    pub mediating: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub id: usize,
    pub endpoints: [usize; 2],
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
    /// Outgoing half-edge ids per vertex, counter-clockwise. Half-edge `2e`
    /// runs from `endpoints[0]` to `endpoints[1]` of edge `e`.
    pub rotations: Vec<Vec<usize>>,
    /// A half-edge with the outer face on its left; absent for edgeless graphs.
    pub outer_half_edge: Option<usize>,
    #[serde(default)]
    pub kind: Option<LatticeKind>,
}

impl GraphJson {
    pub fn from_graph(g: &PlanarGraph) -> Self {
        Self {
            vertices: g
                .vertices()
                .iter()
                .map(|v| VertexJson { id: v.id, x: v.pos[0], y: v.pos[1], boundary: v.boundary, mediating: v.mediating })
                .collect(),
            edges: g
                .edge_list()
                .into_iter()
                .enumerate()
                .map(|(id, (u, v, j))| EdgeJson { id, endpoints: [u, v], coupling: j })
                .collect(),
            rotations: g.rotations(),
            outer_half_edge: g.outer_half_edge(),
            kind: g.kind(),
        }
    }

    pub fn into_graph(self) -> Result<PlanarGraph, GraphError> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex { id: v.id, pos: [v.x, v.y], boundary: v.boundary, mediating: v.mediating })
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            if e.id != i {
                return Err(GraphError::Json(format!("edge at position {i} has id {}", e.id)));
            }
            edges.push((e.endpoints[0], e.endpoints[1], e.coupling));
        }
        let outer = match self.outer_half_edge {
            Some(h) => OuterFace::LeftOf(h),
            None => OuterFace::ByArea,
        };
        let g = PlanarGraph::from_rotations(vertices, edges, self.rotations, outer)?.with_kind(self.kind);
        g.validate()?;
        Ok(g)
    }
}

pub fn to_json(g: &PlanarGraph) -> String {
    serde_json::to_string_pretty(&GraphJson::from_graph(g)).expect("graph JSON serializes")
}

pub fn from_json(text: &str) -> Result<PlanarGraph, GraphError> {
    let parsed: GraphJson = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
    parsed.into_graph()
}
