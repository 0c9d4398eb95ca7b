use proptest::prelude::*;
use zgf_graph::*;

fn check_invariants(g: &PlanarGraph) {
    g.validate().expect("valid embedding");
    for h in 0..g.num_half_edges() {
        let he = g.half_edge(h);
        assert_eq!(g.half_edge(he.twin).twin, h);
        assert_ne!(he.twin, h);
    }
}

#[test]
fn square_boxes_have_expected_counts() {
    let g0 = build_square_lattice(0);
    assert_eq!((g0.num_vertices(), g0.num_edges()), (1, 0));
    assert_eq!(g0.euler_characteristic(), 2);

    let g1 = build_square_lattice(1);
    assert_eq!((g1.num_vertices(), g1.num_edges()), (9, 12));
    assert_eq!(g1.bounded_faces().len(), 4);

    let g2 = build_square_lattice(2);
    assert_eq!((g2.num_vertices(), g2.num_edges(), g2.num_faces()), (25, 40, 17));
    check_invariants(&g2);
    assert_eq!(g2.boundary_vertices().len(), 16);
}

#[test]
fn bounded_faces_of_the_square_box_are_unit_squares() {
    let g = build_square_lattice(2);
    for f in g.bounded_faces() {
        assert_eq!(g.face(f).cycle.len(), 4);
        let c = g.face_centroid(f);
        assert!((c[0].fract().abs() - 0.5).abs() < 1e-12 && (c[1].fract().abs() - 0.5).abs() < 1e-12);
    }
    assert_eq!(g.face(g.outer_face()).cycle.len(), 16);
}

#[test]
fn lattice_degrees() {
    let hex = build_periodic_lattice(LatticeKind::Hexagonal, 3).unwrap();
    check_invariants(&hex);
    assert_eq!(hex.max_degree(), 3);
    assert!((0..hex.num_vertices()).filter(|&v| !hex.vertex(v).boundary).all(|v| hex.degree(v) == 3));

    let tri = build_periodic_lattice(LatticeKind::Triangular, 2).unwrap();
    check_invariants(&tri);
    assert!((0..tri.num_vertices()).filter(|&v| !tri.vertex(v).boundary).all(|v| tri.degree(v) == 6));

    let sq = build_periodic_lattice(LatticeKind::Square, 1).unwrap();
    let direct = build_square_lattice(1);
    assert_eq!(sq.edge_list(), direct.edge_list());
    assert_eq!(sq.rotations(), direct.rotations());
    assert!(parse_kind("kagome").is_err());
}

#[test]
fn dual_of_small_box() {
    let g = build_square_lattice(1);
    let d = dual(&g).unwrap();
    assert_eq!(d.interior_faces().len(), 4);
    assert_eq!(d.boundary_faces().len(), 1);
    assert_eq!(d.num_edges(), g.num_edges());
    // Each interior face of the 2×2 box touches the outer class twice and two
    // interior faces once each.
    for &f in d.interior_faces() {
        let nb = d.neighbors(f);
        assert_eq!(nb.iter().filter(|&&x| d.is_boundary(x)).count(), 2);
        assert_eq!(nb.len(), 4);
    }
}

#[test]
fn cross_edge_map_is_a_bijection() {
    let g = build_square_lattice(2);
    let d = dual(&g).unwrap();
    let mut seen = vec![false; g.num_edges()];
    for de in d.edges() {
        assert!(!seen[de.primal_edge]);
        seen[de.primal_edge] = true;
        assert_eq!(de.left, g.face_left(2 * de.primal_edge));
        assert_eq!(de.right, g.face_right(2 * de.primal_edge));
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn dual_of_dual_recovers_interior_adjacency() {
    let g = build_square_lattice(3);
    let d = dual(&g).unwrap();
    let (inner, _) = d.interior_planar().unwrap();
    check_invariants(&inner);
    let dd = dual(&inner).unwrap();
    // Bounded faces of the interior dual sit at primal interior vertices.
    let locate = |p: [f64; 2]| -> usize {
        (0..g.num_vertices())
            .find(|&v| {
                let q = g.vertex(v).pos;
                (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9
            })
            .expect("centroid lands on a primal vertex")
    };
    let faces = dd.interior_faces().to_vec();
    let at: Vec<usize> = faces.iter().map(|&f| locate(inner.face_centroid(f))).collect();
    let interior_primal: Vec<usize> = (0..g.num_vertices()).filter(|&v| !g.vertex(v).boundary).collect();
    assert_eq!(at.len(), interior_primal.len());
    for (i, &fi) in faces.iter().enumerate() {
        let mut mine: Vec<usize> = dd
            .neighbors(fi)
            .into_iter()
            .filter(|&x| !dd.is_boundary(x))
            .map(|x| at[faces.iter().position(|&f| f == x).unwrap()])
            .collect();
        let mut theirs: Vec<usize> = g.neighbors(at[i]).into_iter().filter(|&w| !g.vertex(w).boundary).collect();
        mine.sort();
        theirs.sort();
        assert_eq!(mine, theirs);
    }
}

#[test]
fn hexagonal_dual_is_triangular_inside() {
    let hex = build_periodic_lattice(LatticeKind::Hexagonal, 4).unwrap();
    let d = dual(&hex).unwrap();
    let deg6 = d
        .interior_faces()
        .iter()
        .filter(|&&f| d.neighbors(f).iter().all(|&x| !d.is_boundary(x)))
        .map(|&f| d.neighbors(f).len())
        .collect::<Vec<_>>();
    assert!(!deg6.is_empty());
    assert!(deg6.iter().all(|&k| k == 6));
}

#[test]
fn dual_rejects_disconnected_input() {
    let vertices = vec![
        Vertex { id: 0, pos: [0.0, 0.0], boundary: false, mediating: false },
        Vertex { id: 1, pos: [1.0, 0.0], boundary: false, mediating: false },
        Vertex { id: 2, pos: [5.0, 0.0], boundary: false, mediating: false },
    ];
    let g = PlanarGraph::from_geometry(vertices, vec![(0, 1, 1.0)]).unwrap();
    assert!(matches!(dual(&g), Err(GraphError::Disconnected)));
}

#[test]
fn subdivision_doubles_edges_with_paper_couplings() {
    let g = build_square_lattice(2);
    let s = subdivide_edges(&g, &[1.5, 3.0]).unwrap();
    check_invariants(&s);
    assert_eq!(s.num_edges(), 2 * g.num_edges());
    assert_eq!(s.num_faces(), g.num_faces());
    for e in 0..g.num_edges() {
        assert_eq!(s.coupling(2 * e), 1.5);
        assert_eq!(s.coupling(2 * e + 1), 3.0);
        // The 3/2 part touches the lower/left endpoint.
        assert_eq!(s.endpoints(2 * e).0, g.endpoints(e).0);
    }
    assert!(matches!(subdivide_edges(&g, &[]), Err(GraphError::EmptySplit)));
}

#[test]
fn identity_split_keeps_the_graph() {
    let g = build_square_lattice(2);
    let s = subdivide_edges(&g, &[1.0]).unwrap();
    assert_eq!(s.edge_list(), g.edge_list());
    assert_eq!(s.rotations(), g.rotations());
    assert_eq!(s.outer_face(), g.outer_face());
}

#[test]
fn square_degree_reduction_is_hexagonal_with_tripled_couplings() {
    let g = build_square_lattice(2);
    let red = degree_reduce(&g).unwrap();
    check_invariants(&red.reduced);
    assert_eq!(red.reduced.max_degree(), 3);
    assert!(red.reduced.couplings().iter().all(|&j| (j - 3.0).abs() < 1e-12));
    // Original vertices survive with their positions.
    for v in 0..g.num_vertices() {
        let w = red.vertex_map[v];
        assert_eq!(red.reduced.vertex(w).pos, g.vertex(v).pos);
    }
    // One merge per vertex owning both an east and a north edge.
    assert_eq!(red.merges.len(), 16);
    assert!(red.merges.iter().all(|m| m.len() == 2));
}

#[test]
fn triangular_reduction_uses_six_parts() {
    let g = build_periodic_lattice(LatticeKind::Triangular, 2).unwrap();
    let red = degree_reduce(&g).unwrap();
    assert_eq!(red.split, vec![6.0; 6]);
    check_invariants(&red.subdivided);
    check_invariants(&red.reduced);
    assert!(red.reduced.max_degree() <= 3);
    for v in 0..g.num_vertices() {
        let w = red.vertex_map[v];
        assert_eq!(red.reduced.vertex(w).pos, g.vertex(v).pos);
    }
}

#[test]
fn hexagonal_reduction_is_a_no_op() {
    let g = build_periodic_lattice(LatticeKind::Hexagonal, 2).unwrap();
    let red = degree_reduce(&g).unwrap();
    assert!(red.merges.is_empty());
    assert_eq!(red.reduced.edge_list(), g.edge_list());
}

#[test]
fn json_round_trip_is_exact() {
    let g = subdivide_edges(&build_square_lattice(1), &[1.0 / 3.0, 0.1, 2.0]).unwrap();
    let text = to_json(&g);
    let back = from_json(&text).unwrap();
    assert_eq!(back.edge_list(), g.edge_list());
    assert_eq!(back.rotations(), g.rotations());
    assert_eq!(back.vertices(), g.vertices());
    assert_eq!(back.outer_face(), g.outer_face());
    assert!(from_json("{\"vertices\": []}").is_err());
}

proptest! {
    #[test]
    fn lattices_satisfy_euler(l in 0usize..5, kind in 0usize..3) {
        let kind = [LatticeKind::Square, LatticeKind::Triangular, LatticeKind::Hexagonal][kind];
        let g = build_periodic_lattice(kind, l).unwrap();
        check_invariants(&g);
        prop_assert_eq!(g.euler_characteristic(), 2);
    }

    #[test]
    fn subdivision_preserves_faces(l in 1usize..4, parts in proptest::collection::vec(0.1f64..5.0, 1..4)) {
        let g = build_square_lattice(l);
        let s = subdivide_edges(&g, &parts).unwrap();
        check_invariants(&s);
        prop_assert_eq!(s.num_faces(), g.num_faces());
        prop_assert_eq!(s.num_edges(), g.num_edges() * parts.len());
        prop_assert_eq!(s.face(s.outer_face()).cycle.len(), g.face(g.outer_face()).cycle.len() * parts.len());
    }

    #[test]
    fn reductions_reach_degree_three(l in 1usize..4, tri in proptest::bool::ANY) {
        let g = if tri { build_periodic_lattice(LatticeKind::Triangular, l).unwrap() } else { build_square_lattice(l) };
        let red = degree_reduce(&g).unwrap();
        check_invariants(&red.reduced);
        prop_assert!(red.reduced.max_degree() <= 3);
    }
}
