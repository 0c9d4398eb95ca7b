use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zgf_exact::HeightConfig;
use zgf_graph::{build_square_lattice, dual, square_vertex, DualGraph, PlanarGraph};
use zgf_loops::*;

fn boxed(l: usize) -> DualGraph {
    dual(&build_square_lattice(l)).unwrap()
}

fn face(dg: &DualGraph, i: i64, j: i64) -> usize {
    dg.primal().face_at([i as f64 + 0.5, j as f64 + 0.5]).unwrap()
}

fn config(dg: &DualGraph, cells: &[((i64, i64), i64)]) -> HeightConfig {
    let mut h = HeightConfig::zeros(dg);
    for &((i, j), n) in cells {
        h.set(face(dg, i, j), n);
    }
    h
}

fn random_config(dg: &DualGraph, rng: &mut ChaCha8Rng, range: i64) -> HeightConfig {
    let mut h = HeightConfig::zeros(dg);
    for &f in dg.interior_faces() {
        h.set(f, rng.gen_range(-range..=range));
    }
    h
}

/// Signed area of the closed polygon through the origins of `hs`.
fn signed_area(g: &PlanarGraph, hs: &[usize]) -> f64 {
    let pts: Vec<[f64; 2]> = hs.iter().map(|&h| g.vertex(g.origin(h)).pos).collect();
    let n = pts.len();
    (0..n).map(|i| pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1]).sum::<f64>() / 2.0
}

/// The event of the exploration, read off the contour decomposition: follow
/// the contour through `e` until it first meets `gamma`, then check the end
/// point, simplicity and the orientation of the closed polygon.
fn oracle(dg: &DualGraph, h: &HeightConfig, gamma: &[usize], e: (usize, usize), q: f64) -> bool {
    let g = dg.primal();
    let set = extract_level_lines(dg, h, q).unwrap();
    let start = g.find_half_edge(e.0, e.1).unwrap();
    let Some(lp) = set.loops.iter().find(|l| l.half_edges.contains(&start)) else { return false };
    let k = lp.half_edges.len();
    let at = lp.half_edges.iter().position(|&s| s == start).unwrap();
    let mut kappa = Vec::new();
    let mut end = None;
    for step in 0..k {
        let s = lp.half_edges[(at + step) % k];
        kappa.push(s);
        if gamma.contains(&g.dest(s)) {
            end = Some(g.dest(s));
            break;
        }
    }
    if end != Some(gamma[0]) {
        return false;
    }
    let mut cycle: Vec<usize> = gamma.windows(2).map(|w| g.find_half_edge(w[0], w[1]).unwrap()).collect();
    cycle.extend(&kappa);
    (signed_area(g, &cycle) > 0.0) == (q > 0.0)
}

#[test]
fn flat_field_has_no_lines() {
    let dg = boxed(2);
    let h = HeightConfig::zeros(&dg);
    for q in [-1.5, -0.5, 0.5, 1.5] {
        let set = extract_level_lines(&dg, &h, q).unwrap();
        assert!(set.segments.is_empty() && set.loops.is_empty() && set.open_lines.is_empty());
    }
    assert!(levels_of(&h).is_empty());
}

#[test]
fn integer_levels_are_rejected() {
    let dg = boxed(1);
    let h = HeightConfig::zeros(&dg);
    assert!(matches!(extract_level_lines(&dg, &h, 1.0), Err(LoopsError::NotHalfInteger(_))));
}

#[test]
fn raised_face_gives_one_positive_loop() {
    let dg = boxed(1);
    let f = face(&dg, 0, 0);
    let h = config(&dg, &[((0, 0), 1)]);
    let set = extract_level_lines(&dg, &h, 0.5).unwrap();
    assert_eq!(set.loops.len(), 1);
    assert_eq!(set.loops[0].orientation, Orientation::Positive);
    assert_eq!(set.loops[0].interior, vec![f]);
    assert_eq!(set.loops[0].half_edges.len(), 4);
    assert!(signed_area(dg.primal(), &set.loops[0].half_edges) > 0.0);
    assert_eq!(count_loops(&dg, &h, f, 0.5, Orientation::Positive).unwrap(), 1);
    assert_eq!(count_loops(&dg, &h, f, 0.5, Orientation::Negative).unwrap(), 0);
}

#[test]
fn saddle_is_resolved_by_turning_right() {
    // Heights 4, -5 below and -6, 7 above the centre vertex.
    let dg = boxed(1);
    let g = dg.primal();
    let h = config(&dg, &[((-1, -1), 4), ((0, -1), -5), ((-1, 0), -6), ((0, 0), 7)]);
    let v = |i, j| square_vertex(1, i, j).unwrap();
    let from_south = g.find_half_edge(v(0, -1), v(0, 0)).unwrap();
    let to_east = g.find_half_edge(v(0, 0), v(1, 0)).unwrap();
    let from_north = g.find_half_edge(v(0, 1), v(0, 0)).unwrap();
    let to_west = g.find_half_edge(v(0, 0), v(-1, 0)).unwrap();
    let set = extract_level_lines(&dg, &h, 0.5).unwrap();
    for (a, b) in [(from_south, to_east), (from_north, to_west)] {
        let lp = set.loops.iter().find(|l| l.half_edges.contains(&a)).unwrap();
        let i = lp.half_edges.iter().position(|&s| s == a).unwrap();
        assert_eq!(lp.half_edges[(i + 1) % lp.half_edges.len()], b);
    }
    // Turning right joins the two high corners into one loop pinched at the
    // centre.
    assert_eq!(set.loops.len(), 1);
    assert_eq!(set.loops[0].orientation, Orientation::Positive);
    assert_eq!(set.loops[0].interior, {
        let mut v = vec![face(&dg, -1, -1), face(&dg, 0, 0)];
        v.sort_unstable();
        v
    });
}

#[test]
fn nested_plateau() {
    let dg = boxed(2);
    let mut cells = Vec::new();
    for i in -1..=1 {
        for j in -1..=1 {
            cells.push(((i, j), if (i, j) == (0, 0) { 2 } else { 1 }));
        }
    }
    let h = config(&dg, &cells);
    let f = face(&dg, 0, 0);
    for q in [0.5, 1.5] {
        assert_eq!(count_loops(&dg, &h, f, q, Orientation::Positive).unwrap(), 1);
        assert_eq!(count_loops(&dg, &h, f, q, Orientation::Negative).unwrap(), 0);
    }
    let c = loop_counts(&dg, &h, f).unwrap();
    assert_eq!(c, LoopCounts { pp: 2, pm: 0, mp: 0, mm: 0 });
}

#[test]
fn boundary_face_is_rejected() {
    let dg = boxed(1);
    let h = HeightConfig::zeros(&dg);
    assert!(matches!(count_loops(&dg, &h, dg.outer_face(), 0.5, Orientation::Positive), Err(LoopsError::BoundaryFace(_))));
}

#[test]
fn polylines_close_up() {
    let dg = boxed(1);
    let h = config(&dg, &[((0, 0), 1)]);
    let set = extract_level_lines(&dg, &h, 0.5).unwrap();
    let lines = set.polylines(dg.primal());
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0].first(), lines[0].last());
    let json: serde_json::Value = serde_json::from_str(&set.polylines_json(dg.primal())).unwrap();
    assert_eq!(json["q"], 0.5);
}

#[test]
fn crossing_identity_and_loop_bound_on_random_configurations() {
    let dg = boxed(3);
    let g = dg.primal();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let h = random_config(&dg, &mut rng, 3);
        let counts = crossing_counts(&dg, &h).unwrap();
        for d in dg.edges() {
            assert_eq!(counts[d.primal_edge] as i64, (h.get(d.left) - h.get(d.right)).abs());
        }
        for &f in dg.interior_faces() {
            let c = loop_counts(&dg, &h, f).unwrap();
            assert!(c.aligned() as i64 >= h.get(f).abs(), "face {f}: {c:?} vs {}", h.get(f));
        }
        for q in levels_of(&h) {
            let set = extract_level_lines(&dg, &h, q).unwrap();
            assert!(set.open_lines.is_empty());
            // Each half-edge appears in exactly one contour.
            let mut used: Vec<usize> = set.loops.iter().flat_map(|l| l.half_edges.iter().copied()).collect();
            used.sort_unstable();
            assert_eq!(used, set.segments);
            // Orientation agrees with the signed area of the polygon.
            for l in &set.loops {
                let a = signed_area(g, &l.half_edges);
                assert_eq!(a > 0.0, l.orientation == Orientation::Positive, "{l:?}");
            }
        }
    }
}

/// A vertex where the faces around it switch between above and below `q`
/// four or more times.
fn has_saddle(dg: &DualGraph, h: &HeightConfig, q: f64) -> bool {
    let g = dg.primal();
    (0..g.num_vertices()).any(|v| {
        let above: Vec<bool> = g.rotation(v).iter().map(|&s| (h.get(g.face_left(s)) as f64) > q).collect();
        (0..above.len()).filter(|&i| above[i] != above[(i + 1) % above.len()]).count() >= 4
    })
}

#[test]
fn net_loop_count_is_the_height_indicator() {
    // Resolution-free: the signed number of q-loops around f is
    // [n_f > q] - [boundary > q].
    let dg = boxed(3);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let h = random_config(&dg, &mut rng, 2);
        for q in levels_of(&h) {
            let set = extract_level_lines(&dg, &h, q).unwrap();
            for &f in dg.interior_faces() {
                let net = set.loops_around(f, Orientation::Positive) as i64 - set.loops_around(f, Orientation::Negative) as i64;
                let want = ((h.get(f) as f64) > q) as i64 - (0.0 > q) as i64;
                assert_eq!(net, want);
            }
        }
    }
}

#[test]
fn negation_flips_levels_and_orientations_away_from_saddles() {
    let dg = boxed(2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for _ in 0..3000 {
        let h = random_config(&dg, &mut rng, 2);
        let m = h.negated();
        for q in levels_of(&h) {
            let a = extract_level_lines(&dg, &h, q).unwrap();
            let b = extract_level_lines(&dg, &m, -q).unwrap();
            // Net counts flip at every level.
            for &f in dg.interior_faces() {
                let net = |s: &LevelLineSet| {
                    s.loops_around(f, Orientation::Positive) as i64 - s.loops_around(f, Orientation::Negative) as i64
                };
                assert_eq!(net(&a), -net(&b));
            }
            if has_saddle(&dg, &h, q) {
                continue;
            }
            checked += 1;
            assert_eq!(a.loops.len(), b.loops.len());
            for &f in dg.interior_faces() {
                for eta in [Orientation::Positive, Orientation::Negative] {
                    assert_eq!(a.loops_around(f, eta), b.loops_around(f, eta.flipped()));
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn saddles_break_the_negation_symmetry() {
    // High corners touching at a vertex are joined, low ones are not, so
    // negating the field regroups the loops.
    let dg = boxed(1);
    let h = config(&dg, &[((-1, -1), 1), ((0, 0), 1)]);
    let up = extract_level_lines(&dg, &h, 0.5).unwrap();
    let down = extract_level_lines(&dg, &h.negated(), -0.5).unwrap();
    assert_eq!(up.loops.len(), 1);
    assert_eq!(down.loops.len(), 2);
    // Counts around each face still agree here.
    for &f in dg.interior_faces() {
        assert_eq!(up.loops_around(f, Orientation::Positive), down.loops_around(f, Orientation::Negative));
    }
}

#[test]
fn exploration_stops_when_the_first_faces_do_not_straddle() {
    let dg = boxed(2);
    let g = dg.primal();
    let v = |i, j| square_vertex(2, i, j).unwrap();
    let gamma = [v(0, 1), v(0, 0), v(1, 0)];
    let e = (v(1, 0), v(1, 1));
    let h_e = g.find_half_edge(e.0, e.1).unwrap();
    let (up, down) = (g.face_left(h_e), g.face_right(h_e));
    let mut h = HeightConfig::zeros(&dg);
    h.set(up, 3);
    h.set(down, 1);
    let r = explore(&dg, &h, &gamma, e, QRule::Fixed(0.5)).unwrap();
    assert!(!r.success);
    assert_eq!(r.revealed, vec![(up, 3), (down, 1)]);
    assert!(r.kappa.is_empty());
}

#[test]
fn exploration_finds_the_loop_around_a_plateau() {
    let dg = boxed(2);
    let v = |i, j| square_vertex(2, i, j).unwrap();
    // The unit face (0,0) raised: the loop runs (1,0) -> (1,1) -> (0,1) -> (0,0).
    let h = config(&dg, &[((0, 0), 1)]);
    let gamma = [v(0, 1), v(0, 0), v(1, 0)];
    let r = explore(&dg, &h, &gamma, (v(1, 0), v(1, 1)), QRule::Fixed(0.5)).unwrap();
    assert!(r.success, "{r:?}");
    assert_eq!(r.kappa.len(), 2);
    assert_eq!(r.high_set, vec![face(&dg, 0, 0)]);
    // The same loop read with the opposite sign of q fails.
    let r = explore(&dg, &h, &gamma, (v(1, 0), v(1, 1)), QRule::Fixed(-0.5)).unwrap();
    assert!(!r.success);
    // A longer closing path that the line meets first at (0,0), not at y.
    let long = [v(0, 2), v(0, 1), v(0, 0), v(1, 0)];
    let r = explore(&dg, &h, &long, (v(1, 0), v(1, 1)), QRule::Fixed(0.5)).unwrap();
    assert!(!r.success);
}

#[test]
fn malformed_inputs_are_rejected() {
    let dg = boxed(2);
    let h = HeightConfig::zeros(&dg);
    let v = |i, j| square_vertex(2, i, j).unwrap();
    // Not adjacent.
    assert!(explore(&dg, &h, &[v(0, 0), v(1, 1)], (v(1, 1), v(2, 1)), QRule::Fixed(0.5)).is_err());
    // Edge back into the path.
    assert!(explore(&dg, &h, &[v(0, 0), v(1, 0)], (v(1, 0), v(0, 0)), QRule::Fixed(0.5)).is_err());
    // Edge not starting at x.
    assert!(explore(&dg, &h, &[v(0, 0), v(1, 0)], (v(0, 0), v(0, 1)), QRule::Fixed(0.5)).is_err());
    // Integer level.
    assert!(explore(&dg, &h, &[v(0, 0), v(1, 0)], (v(1, 0), v(1, 1)), QRule::Fixed(1.0)).is_err());
}

#[test]
fn exploration_agrees_with_the_contour_oracle() {
    let dg = boxed(3);
    let f0 = face(&dg, 0, 0);
    let plus = quadrant_pairs(&dg, f0, Orientation::Positive).unwrap();
    let minus = quadrant_pairs(&dg, f0, Orientation::Negative).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut hits = 0;
    for _ in 0..10_000 {
        let h = random_config(&dg, &mut rng, 2);
        for q in [-1.5, -0.5, 0.5, 1.5] {
            let pairs = if q > 0.0 { &plus } else { &minus };
            for p in pairs.iter().step_by(7) {
                let got = explore(&dg, &h, &p.gamma, p.e, QRule::Fixed(q)).unwrap();
                assert_eq!(got.success, oracle(&dg, &h, &p.gamma, p.e, q), "{p:?} q={q} {h:?}");
                hits += got.success as usize;
            }
        }
    }
    assert!(hits > 100, "the family should see successes, got {hits}");
}

#[test]
fn exhaustive_small_box_agreement_and_loop_lemma() {
    let dg = boxed(2);
    let f0 = face(&dg, 0, 0);
    let free: Vec<usize> = [(-1, -1), (0, -1), (-1, 0), (0, 0), (1, 0), (1, -1)].iter().map(|&(i, j)| face(&dg, i, j)).collect();
    let plus = quadrant_pairs(&dg, f0, Orientation::Positive).unwrap();
    let minus = quadrant_pairs(&dg, f0, Orientation::Negative).unwrap();
    let mut h = HeightConfig::zeros(&dg);
    for code in 0..5usize.pow(6) {
        let mut c = code;
        for &f in &free {
            h.set(f, (c % 5) as i64 - 2);
            c /= 5;
        }
        for q in [-1.5, -0.5, 0.5, 1.5] {
            let (lhs, rhs) = quadrant_event_sum(&dg, &h, f0, q).unwrap();
            assert!(lhs <= rhs, "q={q} {h:?}: {lhs} > {rhs}");
            let pairs = if q > 0.0 { &plus } else { &minus };
            for p in pairs {
                let got = explore(&dg, &h, &p.gamma, p.e, QRule::Fixed(q)).unwrap();
                assert_eq!(got.success, oracle(&dg, &h, &p.gamma, p.e, q));
            }
        }
    }
}

#[test]
fn quadrant_sum_examples() {
    let dg = boxed(3);
    let f0 = face(&dg, 0, 0);
    let flat = HeightConfig::zeros(&dg);
    assert_eq!(quadrant_event_sum(&dg, &flat, f0, 0.5).unwrap(), (0, 0));
    let raised = config(&dg, &[((0, 0), 1), ((-1, 0), 1), ((-1, -1), 1), ((0, -1), 1), ((1, 1), 1), ((1, 0), 1), ((1, -1), 1), ((0, 1), 1), ((-1, 1), 1)]);
    let (lhs, rhs) = quadrant_event_sum(&dg, &raised, f0, 0.5).unwrap();
    assert_eq!(lhs, 4);
    assert!(rhs >= 4);
    let (lhs, rhs) = quadrant_event_sum(&dg, &raised.negated(), f0, -0.5).unwrap();
    assert_eq!(lhs, 4);
    assert!(rhs >= 4);
}

#[test]
fn quadrant_needs_room() {
    let dg = boxed(1);
    let h = HeightConfig::zeros(&dg);
    assert!(matches!(quadrant_event_sum(&dg, &h, face(&dg, 0, 0), 0.5), Err(LoopsError::TooClose(_))));
}

#[test]
fn loop_lemma_on_random_configurations() {
    let dg = boxed(4);
    let f0 = face(&dg, 0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let h = random_config(&dg, &mut rng, 2);
        for q in levels_of(&h) {
            let (lhs, rhs) = quadrant_event_sum(&dg, &h, f0, q).unwrap();
            assert!(lhs <= rhs);
        }
    }
}

fn arb_config(l: usize, range: i64) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-range..=range, 4 * l * l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Changing heights the exploration never looked at changes nothing.
    #[test]
    fn exploration_is_measurable(
        values in arb_config(3, 2),
        noise in arb_config(3, 3),
        pick in 0usize..1000,
        q in prop::sample::select(vec![-1.5, -0.5, 0.5, 1.5]),
        argmax in any::<bool>(),
    ) {
        let dg = boxed(3);
        let f0 = face(&dg, 0, 0);
        let sign = Orientation::of_sign(q);
        let pairs = quadrant_pairs(&dg, f0, sign).unwrap();
        let p = &pairs[pick % pairs.len()];
        let mut h = HeightConfig::zeros(&dg);
        for (i, &f) in dg.interior_faces().iter().enumerate() {
            h.set(f, values[i]);
        }
        let rule = if argmax { QRule::Argmax } else { QRule::Fixed(q) };
        let r = explore(&dg, &h, &p.gamma, p.e, rule).unwrap();
        let mut m = h.clone();
        for (i, &f) in dg.interior_faces().iter().enumerate() {
            if !r.revealed.iter().any(|&(g, _)| g == f) {
                m.set(f, noise[i]);
            }
        }
        let s = explore(&dg, &m, &p.gamma, p.e, rule).unwrap();
        prop_assert_eq!(r, s);
    }

    /// On success the high faces lie inside the loop for q > 0 and the low
    /// faces for q < 0, and the other set lies outside.
    #[test]
    fn revealed_sets_sit_on_the_right_sides(
        values in arb_config(3, 2),
        pick in 0usize..1000,
        q in prop::sample::select(vec![-1.5, -0.5, 0.5, 1.5]),
    ) {
        let dg = boxed(3);
        let g = dg.primal();
        let f0 = face(&dg, 0, 0);
        let pairs = quadrant_pairs(&dg, f0, Orientation::of_sign(q)).unwrap();
        let p = &pairs[pick % pairs.len()];
        let mut h = HeightConfig::zeros(&dg);
        for (i, &f) in dg.interior_faces().iter().enumerate() {
            h.set(f, values[i]);
        }
        let r = explore(&dg, &h, &p.gamma, p.e, QRule::Fixed(q)).unwrap();
        if r.success {
            prop_assert!(r.high_set.iter().all(|&f| (h.get(f) as f64) > q));
            prop_assert!(r.low_set.iter().all(|&f| (h.get(f) as f64) < q));
            // Interior of the loop, by the winding of its polygon around
            // each face centre.
            let mut cycle: Vec<usize> = p.gamma.windows(2).map(|w| g.find_half_edge(w[0], w[1]).unwrap()).collect();
            cycle.extend(&r.kappa);
            let poly: Vec<[f64; 2]> = cycle.iter().map(|&s| g.vertex(g.origin(s)).pos).collect();
            let inside = |f: usize| {
                if f == dg.outer_face() {
                    return false;
                }
                let c = g.face_centroid(f);
                let mut wind = false;
                for i in 0..poly.len() {
                    let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                    if (a[1] > c[1]) != (b[1] > c[1]) && c[0] < a[0] + (c[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]) {
                        wind = !wind;
                    }
                }
                wind
            };
            let (ins, outs) = if q > 0.0 { (&r.high_set, &r.low_set) } else { (&r.low_set, &r.high_set) };
            prop_assert!(ins.iter().all(|&f| inside(f)), "{:?}", r);
            prop_assert!(outs.iter().all(|&f| !inside(f)), "{:?}", r);
        }
    }
}
