//! One function per experiment kind. Each reads its parameters (falling
//! back to the defaults of the acceptance battery), calls the library, and
//! turns the results into checks.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use zgf_exact::{
    annealed_rsd_check, defect_expectation, equality_correlation_check, gaussian_domination_check, rsd_suite,
    simon_lieb_check, spin_correlation_exact, stiffness_check, subdivision_marginal_check, submodularity_check,
    surgery_variance_check, villain_duality, DefectSign, HeightConfig, LatticeModel, SpinModel,
};
use zgf_graph::{build_square_lattice, dual, square_vertex, DualGraph, PlanarGraph};
use zgf_loops::{crossing_counts, extract_level_lines, levels_of, quadrant_event_sum, Orientation, QRule};
use zgf_mc::{
    box_family, chain_rng, depinning_scan, estimate_key_bound, key_bound_exact, metric_xy_refinement, ChainSpec,
    KeyBoundQuery, PathEdge, Trend, ZufChain,
};
use zgf_potential::{bernstein_check, bessel_i, fourier_symbol, Potential};

use crate::config::{Budget, ExperimentConfig, ExperimentKind, GraphKind, GraphSpec, PotentialSpec};
use crate::report::{Check, Observable};
use crate::CliError;

/// What an experiment produced, before it is wrapped into a report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub observables: Vec<Observable>,
    pub data: Value,
}

/// Plain statements of what each experiment verifies, carried into the
/// report.
pub fn reference(kind: ExperimentKind) -> Vec<String> {
    let s: &[&str] = match kind {
        ExperimentKind::Duality => &[
            "(2π)^|V| Z_Villain(β) equals the partition function of the integer Gaussian field at λ = 1/β on the dual graph",
        ],
        ExperimentKind::CorrelationDuality => &[
            "the Villain correlation ⟨σ_x·σ_y⟩ equals E[T^±_γ] for any path γ from y to x, with either sign",
        ],
        ExperimentKind::Stiffness => &[
            "positivity of the stiffness modulus: lowering the heights held on A by one does not decrease Z when min F_A - 1 ≥ max F_B",
        ],
        ExperimentKind::Rsd => &[
            "Pythagoras inequality, sublattice monotonicity, covariance-matrix monotonicity, Hessian bound and correlation inequality for lattice Gaussian fields",
            "partition-function submodularity over sublattices",
            "P[n_x = n_y, n_u = n_v] ≥ P[n_x = n_y] P[n_u = n_v]",
            "sublattice monotonicity of the moment generating function for annealed Gaussian interactions",
        ],
        ExperimentKind::GaussianDomination => &[
            "Gaussian domination: E[exp⟨v,n⟩] ≤ exp(⟨v,-Δ⁻¹v⟩ / 2λ)",
            "gradient moments: E[|⟨v,n⟩|^{1/ε}]^ε ≤ D_ε (2⟨v,-Δ⁻¹v⟩/λ)^{1/2}",
        ],
        ExperimentKind::KeyBound => &["⟨σ_x·σ_y⟩_Villain(β) ≥ P_{ℤGF, λ=1/β}[A^q_{γ,e}]"],
        ExperimentKind::Loops => &[
            "4 N_q(f0) is at most the number of quadrant pairs whose event A^q occurs",
            "the level lines cross every edge |n_u - n_v| times",
            "N^{+,+}(f) + N^{-,-}(f) ≥ |n_f|",
        ],
        ExperimentKind::Surgery => &[
            "splitting every edge into r real-valued parts of coupling rλ leaves the law of the original vertices unchanged",
            "degree reduction yields maximal degree 3 with couplings 3λ and does not raise E[n_x²] at the integer and merging steps",
        ],
        ExperimentKind::SimonLieb => &[
            "⟨σ_x·σ_y⟩ ≤ Σ_{u∈∂Λ} ⟨σ_x·σ_u⟩_Λ ⟨σ_u·σ_y⟩ ≤ Σ_u ⟨σ_x·σ_u⟩ ⟨σ_u·σ_y⟩ for a separating set",
        ],
        ExperimentKind::MetricXy => &[
            "XY correlations on the N-fold refined graph with couplings Nβ converge to the Villain correlations at β",
        ],
        ExperimentKind::Depinning => &[
            "the integer Gaussian field is delocalized at small λ (E[n_0²] grows with L) and localized at large λ",
            "E[n_0²] is non-increasing in λ",
        ],
        ExperimentKind::Bernstein => &[
            "complete monotonicity of exp(-U(√t)) certifies an annealed Gaussian interaction",
            "Σ_l I_{n-l}(β1) I_l(β2) = I_n(β1 + β2)",
            "the Fourier symbol G_U(φ) = Σ_m e^{-imφ - U(m)} is positive",
        ],
    };
    s.iter().map(|x| x.to_string()).collect()
}

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    /// Directory that relative graph files are resolved against.
    pub base: &'a Path,
}

impl Context<'_> {
    fn graphs(&self, default: Vec<GraphSpec>) -> Result<Vec<(String, PlanarGraph)>, CliError> {
        let specs = if self.config.graphs.is_empty() { default } else { self.config.graphs.clone() };
        specs.iter().map(|s| Ok((s.label(), s.build(self.base)?))).collect()
    }

    fn squares(&self, default: &[usize]) -> Result<Vec<(usize, PlanarGraph)>, CliError> {
        let specs: Vec<GraphSpec> = if self.config.graphs.is_empty() {
            default.iter().map(|&l| GraphSpec::square(l)).collect()
        } else {
            self.config.graphs.clone()
        };
        specs
            .iter()
            .map(|s| match (s.kind, s.size) {
                (GraphKind::Square, Some(l)) => Ok((l, s.build(self.base)?)),
                _ => Err(CliError::Config(format!(
                    "`{}` runs on square boxes only, got {}",
                    self.config.experiment,
                    s.label()
                ))),
            })
            .collect()
    }

    fn budget(&self, default: Budget) -> Budget {
        self.config.budget.clone().unwrap_or(default)
    }

    fn chain(&self, default: Budget, seed: u64) -> ChainSpec {
        let b = self.budget(default);
        let mut spec = ChainSpec::villain(1.0, b.sweeps, b.burn_in, seed).with_chains(b.chains);
        spec.thin = b.thin;
        spec.max_updates = b.max_updates;
        spec
    }

    /// An independent generator for one named part of the experiment.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        chain_rng(self.seed, stream)
    }

    /// A seed for chains of one named part, drawn from the master seed.
    fn sub_seed(&self, stream: u64) -> u64 {
        chain_rng(self.seed, 1 << 32 | stream).next_u64()
    }
}

fn or<T: Clone>(v: &Option<T>, default: T) -> T {
    v.clone().unwrap_or(default)
}

fn resolve(specs: &[PotentialSpec]) -> Result<Vec<Potential>, CliError> {
    specs.iter().map(PotentialSpec::resolve).collect()
}

fn face(dg: &DualGraph, i: i64, j: i64) -> usize {
    dg.primal().face_at([i as f64 + 0.5, j as f64 + 0.5]).expect("face of a square box")
}

fn vtx(l: usize, i: i64, j: i64) -> usize {
    square_vertex(l, i, j).expect("vertex of a square box")
}

pub fn run(ctx: &Context) -> Result<Outcome, CliError> {
    match ctx.config.experiment {
        ExperimentKind::Duality => duality(ctx),
        ExperimentKind::CorrelationDuality => correlation_duality(ctx),
        ExperimentKind::Stiffness => stiffness(ctx),
        ExperimentKind::Rsd => rsd(ctx),
        ExperimentKind::GaussianDomination => gaussian_domination(ctx),
        ExperimentKind::KeyBound => key_bound(ctx),
        ExperimentKind::Loops => loops(ctx),
        ExperimentKind::Surgery => surgery(ctx),
        ExperimentKind::SimonLieb => simon_lieb(ctx),
        ExperimentKind::MetricXy => metric_xy(ctx),
        ExperimentKind::Depinning => depinning(ctx),
        ExperimentKind::Bernstein => bernstein(ctx),
    }
}

fn duality(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let mut out = Outcome::default();
    for (label, g) in ctx.graphs(vec![GraphSpec::square(1), GraphSpec::square(2)])? {
        for beta in or(&p.beta, vec![0.5, 1.0, 2.0]) {
            let r = villain_duality(&g, beta, p.points)?;
            out.checks.push(Check::from_report(format!("{label} β={beta}"), &r));
        }
    }
    Ok(out)
}

/// Vertex paths on the `L = 1` box, as `(i, j)` coordinates. Paths that
/// share their endpoints come in adjacent pairs.
const DEFECT_PATHS: [&[(i64, i64)]; 8] = [
    &[(-1, -1), (0, -1), (1, -1), (1, 0)],
    &[(-1, -1), (-1, 0), (0, 0), (1, 0)],
    &[(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)],
    &[(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)],
    &[(0, 0), (1, 0), (1, 1)],
    &[(-1, 0), (-1, -1), (0, -1)],
    &[(0, -1), (0, 0), (0, 1)],
    &[(1, 1), (0, 1), (0, 0), (0, -1), (-1, -1)],
];

fn correlation_duality(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let k = or(&p.window, 8);
    let g = build_square_lattice(1);
    let dg = dual(&g)?;
    let mut out = Outcome::default();
    for beta in or(&p.beta, vec![0.5, 1.0, 2.0]) {
        let u = Potential::gaussian(1.0 / beta)?;
        let mut plus = Vec::new();
        for coords in DEFECT_PATHS {
            let path: Vec<usize> = coords.iter().map(|&(i, j)| vtx(1, i, j)).collect();
            let (y, x) = (path[0], *path.last().unwrap());
            let spin = spin_correlation_exact(&g, SpinModel::Villain, beta, x, y)?;
            let label = format!("β={beta} γ={coords:?}");
            for sign in [DefectSign::Plus, DefectSign::Minus] {
                let t = defect_expectation(&dg, &u, &path, sign, k)?;
                let name = if matches!(sign, DefectSign::Plus) { "defect-plus" } else { "defect-minus" };
                let mut c = Check::le(name, label.clone(), (t.value - spin).abs(), 0.0, 1e-6);
                c.tail = t.tail;
                out.checks.push(c);
                if matches!(sign, DefectSign::Plus) {
                    plus.push((coords, t));
                }
            }
        }
        for w in plus.windows(2) {
            let ((a, ta), (b, tb)) = (&w[0], &w[1]);
            if a.first() == b.first() && a.last() == b.last() {
                let mut c = Check::le(
                    "homotopic-paths",
                    format!("β={beta} {a:?} ~ {b:?}"),
                    (ta.value - tb.value).abs(),
                    0.0,
                    1e-9,
                );
                c.tail = ta.tail.max(tb.tail);
                out.checks.push(c);
            }
        }
    }
    Ok(out)
}

fn stiffness(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let k = or(&p.window, 8);
    let instances = or(&p.instances, 50);
    let potentials = resolve(&or(
        &p.potentials,
        ["gaussian:l=0.5", "gaussian:l=1.0", "gaussian:l=2.0", "bessel:b=1.0", "bessel:b=2.0"]
            .map(PotentialSpec::text)
            .to_vec(),
    ))?;
    let boxes: Vec<(String, DualGraph)> = ctx
        .graphs(vec![GraphSpec::square(1), GraphSpec::square(2)])?
        .into_iter()
        .map(|(l, g)| Ok((l, dual(&g)?)))
        .collect::<Result<_, CliError>>()?;
    let mut out = Outcome::default();
    for (pi, u) in potentials.iter().enumerate() {
        let mut rng = ctx.rng(pi as u64);
        for i in 0..instances {
            let (label, dg) = &boxes[i % boxes.len()];
            let (a, b) = stiffness_instance(dg, &mut rng);
            let r = stiffness_check(dg, u, &a, &b, k)?;
            out.checks.push(Check::from_report(format!("{label} {u} A={a:?} B={b:?}"), &r));
        }
    }
    Ok(out)
}

/// Disjoint face sets with `min F_A - 1 ≥ max F_B` and `F_A ≥ 1`, so the
/// outer face, held at 0, may join `B`.
fn stiffness_instance(dg: &DualGraph, rng: &mut ChaCha8Rng) -> (BTreeMap<usize, i64>, BTreeMap<usize, i64>) {
    let mut faces = dg.interior_faces().to_vec();
    faces.shuffle(rng);
    let n = faces.len();
    let na = rng.gen_range(1..=n.min(3));
    let nb = rng.gen_range(0..=(n - na).min(3));
    let base = rng.gen_range(1..=3);
    let a: BTreeMap<usize, i64> = faces[..na].iter().map(|&f| (f, base + rng.gen_range(0..=2))).collect();
    let top = a.values().min().unwrap() - 1;
    let b = faces[na..na + nb].iter().map(|&f| (f, top - rng.gen_range(0..=2))).collect();
    (a, b)
}

fn random_form(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = [rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)];
    let off = rng.gen_range(-0.25..0.25) * f64::min(d[0], d[1]);
    vec![vec![d[0], off], vec![off, d[1]]]
}

fn random_height_potential(rng: &mut ChaCha8Rng, i: usize) -> Result<Potential, CliError> {
    Ok(if i.is_multiple_of(2) { Potential::gaussian(rng.gen_range(0.3..2.0))? } else { Potential::bessel(rng.gen_range(0.5..2.0))? })
}

fn rsd(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let instances = or(&p.instances, 100);
    let annealed = or(&p.annealed_instances, 20);
    let mut out = Outcome::default();

    let mut rng = ctx.rng(0);
    for i in 0..instances {
        let a = random_form(&mut rng);
        let shrink = rng.gen_range(0.2..1.0);
        let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x * shrink).collect()).collect();
        let (s0, s1) = (rng.gen_range(1..4), rng.gen_range(1..4));
        let u: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.6..0.6)).collect();
        let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.6..0.6)).collect();
        let l = LatticeModel::new(a)?;
        let m = l.clone().scaled(0, s0).scaled(1, s1);
        let r = rsd_suite(&l, &m, &b, &u, &v)?;
        for c in &r.checks {
            out.checks.push(Check::from_report(format!("lattice #{i} sub=({s0},{s1})"), c));
        }
    }

    let mut rng = ctx.rng(1);
    for i in 0..instances {
        let l = LatticeModel::new(random_form(&mut rng))?;
        let s: Vec<i64> = (0..4).map(|_| rng.gen_range(1..4)).collect();
        let m = l.clone().scaled(0, s[0]).scaled(1, s[1]);
        let n = l.clone().scaled(0, s[2]).scaled(1, s[3]);
        let r = submodularity_check(&l, &m, &n)?;
        out.checks.push(Check::from_report(format!("lattice #{i} M=({},{}) N=({},{})", s[0], s[1], s[2], s[3]), &r));
    }

    let dg = dual(&build_square_lattice(1))?;
    let faces = dg.interior_faces().to_vec();
    let mut rng = ctx.rng(2);
    for i in 0..instances {
        let u = random_height_potential(&mut rng, i)?;
        let mut pick = || {
            let mut two: Vec<usize> = faces.choose_multiple(&mut rng, 2).copied().collect();
            two.sort();
            (two[0], two[1])
        };
        let (xy, uv) = (pick(), pick());
        let r = equality_correlation_check(&dg, &u, xy, uv)?;
        out.checks.push(Check::from_report(format!("{u} xy={xy:?} uv={uv:?}"), &r));
    }

    let mut rng = ctx.rng(3);
    for i in 0..annealed {
        let u = random_height_potential(&mut rng, i)?;
        let size = rng.gen_range(2..=3);
        let group: Vec<usize> = faces.choose_multiple(&mut rng, size).copied().collect();
        let mut v = vec![0.0; dg.num_faces()];
        for &f in &faces {
            v[f] = rng.gen_range(-0.5..0.5);
        }
        let r = annealed_rsd_check(&dg, &u, std::slice::from_ref(&group), &v)?;
        out.checks.push(Check::from_report(format!("{u} merge={group:?}"), &r));
    }
    Ok(out)
}

fn gaussian_domination(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let k = or(&p.window, 8);
    let instances = or(&p.instances, 20);
    let mut out = Outcome::default();
    let boxes = ctx.squares(&[2])?;
    let mut rng = ctx.rng(0);
    for i in 0..instances {
        let (l, g) = &boxes[i % boxes.len()];
        let dg = dual(g)?;
        let lambda = rng.gen_range(0.0..4f64.ln()).exp();
        // The moment bound needs the joint law of the faces under v, so
        // the support stays small.
        let mut v = vec![0.0; dg.num_faces()];
        let size = rng.gen_range(1..=4);
        for &f in dg.interior_faces().choose_multiple(&mut rng, size) {
            v[f] = rng.gen_range(-0.6..0.6);
        }
        let r = gaussian_domination_check(&dg, lambda, &v, k)?;
        let label = format!("L={l} λ={lambda:.4} #{i}");
        out.checks.push(Check::from_report(&label, &r.mgf));
        for m in &r.moments {
            out.checks.push(Check::from_report(&label, m));
        }
    }
    Ok(out)
}

/// Fixed questions for the sampled key bound on a box of half-width `l ≥ 2`:
/// a straight path, an L-shaped one, a single vertex and a path off the
/// centre.
fn key_bound_paths(l: usize) -> Vec<PathEdge> {
    let v = |i, j| vtx(l, i, j);
    vec![
        PathEdge { gamma: vec![v(-2, 0), v(-1, 0), v(0, 0)], e: (v(0, 0), v(1, 0)) },
        PathEdge { gamma: vec![v(-1, -1), v(0, -1), v(0, 0)], e: (v(0, 0), v(1, 0)) },
        PathEdge { gamma: vec![v(0, 0)], e: (v(0, 0), v(0, 1)) },
        PathEdge { gamma: vec![v(-2, 0), v(-2, 1), v(-1, 1), v(0, 1)], e: (v(0, 1), v(0, 2)) },
    ]
}

fn key_bound(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let mut rules: Vec<QRule> = or(&p.q, vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]).into_iter().map(QRule::Fixed).collect();
    if or(&p.argmax, true) {
        rules.push(QRule::Argmax);
    }
    let mut out = Outcome::default();
    let g = build_square_lattice(1);
    let family = box_family(&g, or(&p.max_len, 4));
    let mut exact_table = Vec::new();
    for beta in or(&p.beta, vec![1.0, 2.0]) {
        let rows = key_bound_exact(&g, beta, &family, &rules)?;
        // One check per rule: the tightest (γ, e) of the family.
        for rule in &rules {
            let of_rule: Vec<_> = rows.iter().filter(|r| r.rule == *rule).collect();
            let worst = of_rule
                .iter()
                .min_by(|a, b| (a.lhs - a.rhs).total_cmp(&(b.lhs - b.rhs)))
                .expect("the family is not empty");
            let failed = of_rule.iter().filter(|r| !r.pass).count();
            let mut c = Check::le(
                "key-bound-exact",
                format!(
                    "L=1 β={beta} {rule:?}: {} paths, {failed} failed, tightest γ={:?} e={:?}",
                    of_rule.len(),
                    worst.path.gamma,
                    worst.path.e
                ),
                worst.rhs,
                worst.lhs,
                1e-12,
            );
            c.pass = failed == 0;
            c.tail = worst.tail;
            out.checks.push(c);
        }
        exact_table.push(json!({ "beta": beta, "family": family.len(), "rows": rows.len() }));
    }

    let l = or(&p.mc_size, 4);
    if l < 2 {
        return Err(CliError::Config("the sampled key bound needs mc_size ≥ 2".into()));
    }
    let g = build_square_lattice(l);
    let queries: Vec<KeyBoundQuery> =
        key_bound_paths(l).into_iter().map(|path| KeyBoundQuery { path, rules: rules.clone() }).collect();
    for (j, beta) in or(&p.mc_beta, vec![1.0, 3.0]).into_iter().enumerate() {
        let spec = ctx.chain(Budget::new(20_000, 2_000), ctx.sub_seed(j as u64));
        let rep = estimate_key_bound(&g, beta, &queries, &spec)?;
        for item in &rep.items {
            let corr = format!("β={beta} corr γ={:?}", item.path.gamma);
            out.observables.push(Observable { name: corr, estimate: item.lhs });
            for (rule, est) in &item.rhs {
                out.observables.push(Observable {
                    name: format!("β={beta} P[A] γ={:?} e={:?} {rule:?}", item.path.gamma, item.path.e),
                    estimate: *est,
                });
                // Flagged only if the bound fails by more than 3σ each side.
                let lhs = item.lhs.mean + 3.0 * item.lhs.sigma;
                let rhs = est.mean - 3.0 * est.sigma;
                out.checks.push(Check::le(
                    "key-bound-mc",
                    format!("L={l} β={beta} γ={:?} e={:?} {rule:?}", item.path.gamma, item.path.e),
                    rhs,
                    lhs,
                    0.0,
                ));
            }
        }
    }
    out.data = json!({ "exact": exact_table });
    Ok(out)
}

/// Violation counts of the three loop statements over a set of
/// configurations.
#[derive(Default)]
struct LoopTally {
    configs: usize,
    quadrant: usize,
    crossing: usize,
    height: usize,
}

impl LoopTally {
    fn visit(&mut self, dg: &DualGraph, h: &HeightConfig, f0: usize, levels: &[f64]) -> Result<(), CliError> {
        self.configs += 1;
        for &q in levels {
            let (lhs, rhs) = quadrant_event_sum(dg, h, f0, q)?;
            if lhs > rhs {
                self.quadrant += 1;
            }
        }
        let counts = crossing_counts(dg, h)?;
        for d in dg.edges() {
            if counts[d.primal_edge] as i64 != (h.get(d.left) - h.get(d.right)).abs() {
                self.crossing += 1;
            }
        }
        let mut aligned = vec![0usize; dg.num_faces()];
        for q in levels_of(h) {
            let set = extract_level_lines(dg, h, q)?;
            let eta = if q > 0.0 { Orientation::Positive } else { Orientation::Negative };
            for &f in dg.interior_faces() {
                aligned[f] += set.loops_around(f, eta);
            }
        }
        for &f in dg.interior_faces() {
            if (aligned[f] as i64) < h.get(f).abs() {
                self.height += 1;
            }
        }
        Ok(())
    }

    fn checks(&self, label: &str, out: &mut Outcome) {
        let instance = format!("{label}: {} configurations", self.configs);
        for (name, n) in [("quadrant-lemma", self.quadrant), ("crossing-count", self.crossing), ("loops-to-height", self.height)]
        {
            out.checks.push(Check::le(name, instance.clone(), n as f64, 0.0, 0.0));
        }
    }
}

fn loops(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let levels = or(&p.q, vec![-1.5, -0.5, 0.5, 1.5]);
    let mut out = Outcome::default();
    if or(&p.scan, true) {
        let dg = dual(&build_square_lattice(2))?;
        let f0 = face(&dg, 0, 0);
        let free: Vec<usize> =
            [(-1, -1), (0, -1), (-1, 0), (0, 0), (1, 0), (1, -1)].iter().map(|&(i, j)| face(&dg, i, j)).collect();
        let mut tally = LoopTally::default();
        let mut h = HeightConfig::zeros(&dg);
        for code in 0..5usize.pow(free.len() as u32) {
            let mut c = code;
            for &f in &free {
                h.set(f, (c % 5) as i64 - 2);
                c /= 5;
            }
            tally.visit(&dg, &h, f0, &levels)?;
        }
        tally.checks("L=2 exhaustive, six free faces in -2..=2", &mut out);
    }
    let l = or(&p.mc_size, 4);
    let dg = dual(&build_square_lattice(l))?;
    let f0 = dg
        .primal()
        .face_at([0.5, 0.5])
        .ok_or_else(|| CliError::Config("mc_size is too small for the quadrant construction".into()))?;
    for (j, lambda) in or(&p.lambda, vec![0.5]).into_iter().enumerate() {
        let mut spec = ctx.chain(Budget { thin: 10, ..Budget::new(10_500, 500) }, ctx.sub_seed(j as u64));
        spec.model = zgf_mc::ModelSpec::Zuf { potential: Potential::gaussian(lambda)? };
        let mut tally = LoopTally::default();
        for h in ZufChain::new(&dg, &spec, 0)? {
            // Every level present, not just the fixed list.
            tally.visit(&dg, &h, f0, &levels_of(&h))?;
        }
        tally.checks(&format!("L={l} heat bath λ={lambda}"), &mut out);
    }
    Ok(out)
}

fn surgery(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let mut out = Outcome::default();
    let mut table = Vec::new();
    for (label, g) in ctx.graphs(vec![GraphSpec::sized(GraphKind::Ladder, 2), GraphSpec::square(2)])? {
        for lambda in or(&p.lambda, vec![1.0]) {
            let here = format!("{label} λ={lambda}");
            let faces = dual(&g)?.interior_faces().len();
            if faces <= 2 {
                for r in or(&p.n, vec![2, 3]) {
                    let c = subdivision_marginal_check(&g, lambda, r)?;
                    out.checks.push(Check::from_report(format!("{here} r={r}"), &c));
                }
            }
            let rep = surgery_variance_check(&g, lambda)?;
            out.checks.push(Check::le("max-degree", here.clone(), rep.max_degree as f64, 3.0, 0.0));
            // Graphs already of degree at most 3 are left as they are.
            let degree = (0..g.num_vertices()).map(|v| g.neighbors(v).len()).max().unwrap_or(0);
            if degree > 3 {
                let worst = rep.coupling_factors.iter().map(|c| (c - 3.0).abs()).fold(0.0, f64::max);
                out.checks.push(Check::le("reduced-coupling", format!("{here}: |J/λ - 3|"), worst, 0.0, 1e-12));
            }
            for c in &rep.checks {
                out.checks.push(Check::from_report(&here, c));
            }
            table.push(json!({ "graph": label, "lambda": lambda, "variances": rep.variances }));
        }
    }
    out.data = Value::Array(table);
    Ok(out)
}

fn simon_lieb(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let specs = if ctx.config.graphs.is_empty() {
        vec![GraphSpec::sized(GraphKind::Path, 3), GraphSpec::sized(GraphKind::Path, 4), GraphSpec::sized(GraphKind::Star, 3)]
    } else {
        ctx.config.graphs.clone()
    };
    let mut out = Outcome::default();
    for spec in &specs {
        let g = spec.build(ctx.base)?;
        let n = g.num_vertices();
        // (x, y, separator) triples.
        let cases: Vec<(usize, usize, Vec<usize>)> = match spec.kind {
            GraphKind::Path if n >= 3 => {
                let mut c: Vec<_> = (0..n - 1).map(|b| (0, n - 1, vec![b])).collect();
                c.push((0, n - 1, (1..n - 1).collect()));
                c
            }
            GraphKind::Star if n >= 3 => vec![(1, 2, vec![0]), (1, n - 1, vec![0]), (1, 0, vec![1])],
            _ => {
                return Err(CliError::Config(format!(
                    "simon-lieb runs on paths with at least 3 vertices and stars with at least 2 leaves, got {}",
                    spec.label()
                )))
            }
        };
        for beta in or(&p.beta, vec![0.5, 1.0, 2.0]) {
            for model in [SpinModel::Xy, SpinModel::Villain] {
                for (x, y, sep) in &cases {
                    let r = simon_lieb_check(&g, model, beta, *x, *y, sep)?;
                    let label = format!("{} {model:?} β={beta} x={x} y={y} B={sep:?}", spec.label());
                    out.checks.push(Check::from_report(&label, &r.restricted));
                    out.checks.push(Check::from_report(&label, &r.full));
                }
            }
        }
    }
    Ok(out)
}

fn metric_xy(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let ns = or(&p.n, vec![1, 2, 4, 8]);
    let mut out = Outcome::default();
    let mut table = Vec::new();
    for (gi, (label, g)) in ctx.graphs(vec![GraphSpec::sized(GraphKind::Path, 2)])?.into_iter().enumerate() {
        let pairs = or(&p.pairs, vec![(0, g.num_vertices() - 1)]);
        for (bi, beta) in or(&p.beta, vec![1.0]).into_iter().enumerate() {
            let spec = ctx.chain(Budget::new(4_000_000, 100_000), ctx.sub_seed((gi * 1000 + bi) as u64));
            for &(x, y) in &pairs {
                let villain = spin_correlation_exact(&g, SpinModel::Villain, beta, x, y)?;
                let mut gaps: Vec<(usize, f64, f64)> = Vec::new();
                for &n in &ns {
                    let est = metric_xy_refinement(&g, beta, n, &[(x, y)], &spec)?.correlations[0];
                    out.observables.push(Observable { name: format!("{label} β={beta} N={n} corr({x},{y})"), estimate: est });
                    gaps.push((n, (est.mean - villain).abs(), est.sigma));
                    table.push(json!({ "graph": label, "beta": beta, "n": n, "pair": [x, y], "xy": est, "villain": villain }));
                }
                let here = format!("{label} β={beta} ({x},{y})");
                for w in gaps.windows(2) {
                    out.checks.push(Check::le(
                        "gap-decreases",
                        format!("{here} N={}→{}", w[0].0, w[1].0),
                        w[1].1,
                        w[0].1,
                        0.0,
                    ));
                }
                let (n, gap, sigma) = *gaps.last().expect("at least one refinement");
                out.checks.push(Check::le("gap-small", format!("{here} N={n}: bound 0.01 + 3σ"), gap, 0.01 + 3.0 * sigma, 0.0));
            }
        }
    }
    out.data = Value::Array(table);
    Ok(out)
}

fn depinning(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let boxes = ctx.squares(&[2, 4, 8, 16])?;
    let ls: Vec<usize> = boxes.iter().map(|b| b.0).collect();
    let lambdas = or(&p.lambda, vec![0.2, 1.0, 5.0]);
    let spec = ctx.chain(Budget::new(60_000, 5_000), ctx.seed);
    let table = depinning_scan(&ls, &Potential::gaussian(1.0)?, &lambdas, &spec)?;
    let mut out = Outcome::default();
    for r in &table.rows {
        out.observables.push(Observable { name: format!("L={} λ={} E[n_c^2]", r.l, r.lambda), estimate: r.variance });
    }
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(0.0, f64::max);
    let trend = |lam| table.trend(lam).unwrap_or(Trend::Undetermined);
    out.checks.push(Check::flag("grows-at-small-coupling", format!("λ={lo} over L={ls:?}: {:?}", trend(lo)), trend(lo) == Trend::Growing));
    out.checks.push(Check::flag("flat-at-large-coupling", format!("λ={hi} over L={ls:?}: {:?}", trend(hi)), trend(hi) == Trend::Flat));
    for (l, ok) in &table.monotone_in_lambda {
        out.checks.push(Check::flag("monotone-in-coupling", format!("L={l} λ={lambdas:?}"), *ok));
    }
    out.data = serde_json::to_value(&table).expect("tables serialize");
    Ok(out)
}

fn bernstein_grid() -> Vec<f64> {
    (0..=40).map(|i| 0.1 * 100f64.powf(i as f64 / 40.0)).collect()
}

fn bernstein(ctx: &Context) -> Result<Outcome, CliError> {
    let p = &ctx.config.params;
    let k_max = or(&p.k_max, 6);
    let grid = bernstein_grid();
    let mut out = Outcome::default();
    let mut reports = Vec::new();
    let accepted = resolve(&or(&p.potentials, ["power:l=1.0,a=1.0", "power:l=1.0,a=1.5"].map(PotentialSpec::text).to_vec()))?;
    let rejected = resolve(&or(&p.rejected, vec![PotentialSpec::text("power:l=1.0,a=3.0")]))?;
    for (u, expect) in accepted.iter().map(|u| (u, true)).chain(rejected.iter().map(|u| (u, false))) {
        let r = bernstein_check(u, k_max, &grid)?;
        let worst = r.min_scaled_by_order.iter().copied().fold(f64::INFINITY, f64::min);
        let offending = if r.violations.is_empty() {
            String::new()
        } else {
            let shown: Vec<String> = r.violations.iter().take(8).map(|(k, t)| format!("(k={k}, t={t:.6})")).collect();
            format!(" offending {} of {}: {}", shown.len(), r.violations.len(), shown.join(" "))
        };
        let name = if expect { "bernstein" } else { "bernstein-rejects" };
        let mut c = Check::le(name, format!("{u} k≤{k_max}{offending}"), -worst, 0.0, r.tol);
        c.pass = r.pass == expect;
        out.checks.push(c);
        reports.push(json!({ "potential": u.to_string(), "expected_pass": expect, "report": r }));
    }

    // Σ_l I_{n-l}(β1) I_l(β2) = I_n(β1 + β2), truncated at |l| ≤ 64.
    for (n, b1, b2) in [(0i64, 1.0, 1.5), (2, 1.0, 1.5), (3, 0.5, 2.0), (1, 2.0, 2.0)] {
        let mut sum = 0.0;
        for l in -64..=64 {
            sum += bessel_i(n - l, b1)? * bessel_i(l, b2)?;
        }
        let want = bessel_i(n, b1 + b2)?;
        out.checks.push(Check::le(
            "bessel-addition",
            format!("n={n} β1={b1} β2={b2}"),
            ((sum - want) / want).abs(),
            0.0,
            1e-10,
        ));
    }

    let symbols = resolve(&or(
        &p.symbols,
        ["gaussian:l=1.0", "bessel:b=1.0", "power:l=1.0,a=1.0", "power:l=1.0,a=1.5"].map(PotentialSpec::text).to_vec(),
    ))?;
    for u in &symbols {
        let min = (0..1024)
            .map(|i| fourier_symbol(u, std::f64::consts::TAU * i as f64 / 1024.0 - std::f64::consts::PI, 64))
            .fold(f64::INFINITY, f64::min);
        let mut c = Check::le("fourier-positivity", format!("{u}: min over 1024 angles"), 0.0, min, 0.0);
        c.pass = min > 0.0;
        out.checks.push(c);
    }
    out.data = Value::Array(reports);
    Ok(out)
}
