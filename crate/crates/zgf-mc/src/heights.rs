use rand::Rng;
use rand_chacha::ChaCha8Rng;
use zgf_exact::{with_coupling, HeightConfig};
use zgf_graph::DualGraph;
use zgf_potential::Potential;

use crate::{chain_rng, ChainSpec, McError, ModelSpec};

/// The conditional law of one height is accepted once the mass it leaves
/// outside its window is certified below this.
pub const CONDITIONAL_TAIL: f64 = 1e-12;

/// The exact conditional law of a single height given its neighbours.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    /// Value of `probs[0]`.
    pub lo: i64,
    pub probs: Vec<f64>,
    /// Bound on the mass outside `lo..lo + probs.len()`.
    pub tail: f64,
}

impl Conditional {
    pub fn prob(&self, n: i64) -> f64 {
        usize::try_from(n - self.lo).ok().and_then(|i| self.probs.get(i)).copied().unwrap_or(0.0)
    }

    fn draw(&self, u: f64) -> i64 {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.lo + i as i64;
            }
        }
        self.lo + self.probs.len() as i64 - 1
    }
}

/// `P(n_x = n | neighbours) ∝ exp(-Σ U_i(n - m_i))` over the window
/// `[min m_i - k, max m_i + k]`.
///
/// The window grows by two on each side until the outermost probability on
/// either side, continued as a geometric series with the ratio of the last
/// two entries, bounds the missing mass below [`CONDITIONAL_TAIL`]. That is
/// a proof of the bound for potentials convex beyond the window, which all
/// the analytic families are.
pub fn heat_bath_conditional(neighbours: &[(i64, &Potential)], k: i64) -> Conditional {
    let mut c = Conditional { lo: 0, probs: Vec::new(), tail: 0.0 };
    fill_conditional(neighbours, k, &mut c);
    c
}

/// [`heat_bath_conditional`] into a reused buffer.
/// Returns the half-width that was needed.
fn fill_conditional(neighbours: &[(i64, &Potential)], k: i64, out: &mut Conditional) -> i64 {
    let lo_nb = neighbours.iter().map(|n| n.0).min().unwrap_or(0);
    let hi_nb = neighbours.iter().map(|n| n.0).max().unwrap_or(0);
    let mut k = k.max(1);
    loop {
        let lo = lo_nb - k;
        let probs = &mut out.probs;
        probs.clear();
        probs.extend((lo..=hi_nb + k).map(|n| neighbours.iter().map(|&(m, u)| u.eval(n - m)).sum::<f64>()));
        let e_min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for p in probs.iter_mut() {
            *p = (e_min - *p).exp();
            total += *p;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        let side = |edge: f64, inner: f64| {
            if edge == 0.0 {
                0.0
            } else if edge < inner {
                let r = edge / inner;
                edge * r / (1.0 - r)
            } else {
                f64::INFINITY
            }
        };
        let m = probs.len();
        let tail = side(probs[0], probs[1]) + side(probs[m - 1], probs[m - 2]);
        if tail < CONDITIONAL_TAIL || k > 1 << 20 {
            out.lo = lo;
            out.tail = tail;
            return k;
        }
        k += 2;
    }
}

/// A single-site heat-bath chain on the bounded faces of a dual graph, the
/// outer face held at 0.
///
/// Iterating yields the configuration after burn-in and then after every
/// `thin` sweeps, `spec.kept()` times in all.
pub struct ZufChain {
    order: Vec<usize>,
    neighbours: Vec<Vec<(usize, usize)>>,
    potentials: Vec<Potential>,
    heights: HeightConfig,
    rng: ChaCha8Rng,
    window: i64,
    random_scan: bool,
    burn_in: usize,
    thin: usize,
    remaining: usize,
    sweeps_done: usize,
    max_tail: f64,
    scratch: Conditional,
}

impl ZufChain {
    /// Chain number `index` of the run described by `spec`.
    pub fn new(dg: &DualGraph, spec: &ChainSpec, index: u64) -> Result<Self, McError> {
        spec.validate()?;
        let ModelSpec::Zuf { potential } = &spec.model else {
            return Err(McError::Spec("a height chain needs a zuf model".into()));
        };
        spec.check_budget(dg.interior_faces().len())?;
        let mut potentials: Vec<Potential> = Vec::new();
        let mut couplings: Vec<f64> = Vec::new();
        let mut neighbours = vec![Vec::new(); dg.num_faces()];
        for e in dg.edges() {
            if e.left == e.right {
                continue;
            }
            let p = match couplings.iter().position(|&c| c == e.coupling) {
                Some(p) => p,
                None => {
                    couplings.push(e.coupling);
                    potentials.push(with_coupling(potential, e.coupling)?);
                    potentials.len() - 1
                }
            };
            neighbours[e.left].push((e.right, p));
            neighbours[e.right].push((e.left, p));
        }
        // Raster order: rows bottom to top, left to right within a row.
        let g = dg.primal();
        let mut order: Vec<usize> = dg.interior_faces().to_vec();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (g.face_centroid(a), g.face_centroid(b));
            ca[1].total_cmp(&cb[1]).then(ca[0].total_cmp(&cb[0]))
        });
        Ok(ZufChain {
            order,
            neighbours,
            potentials,
            heights: HeightConfig::zeros(dg),
            rng: chain_rng(spec.seed, index),
            window: spec.window,
            random_scan: spec.random_scan,
            burn_in: spec.burn_in,
            thin: spec.thin,
            remaining: spec.kept(),
            sweeps_done: 0,
            max_tail: 0.0,
            scratch: Conditional { lo: 0, probs: Vec::new(), tail: 0.0 },
        })
    }

    fn update(&mut self, f: usize) {
        // Faces of a planar box have few neighbours; keep them on the stack.
        let mut buf: [(i64, &Potential); 8] = [(0, &self.potentials[0]); 8];
        let list = &self.neighbours[f];
        let nb: Vec<(i64, &Potential)>;
        let nb_slice: &[(i64, &Potential)] = if list.len() <= 8 {
            for (slot, &(g, p)) in buf.iter_mut().zip(list) {
                *slot = (self.heights.get(g), &self.potentials[p]);
            }
            &buf[..list.len()]
        } else {
            nb = list.iter().map(|&(g, p)| (self.heights.get(g), &self.potentials[p])).collect();
            &nb
        };
        // Start from the half-width the last update needed: the certificate
        // is checked either way, this only skips windows known to be short.
        self.window = fill_conditional(nb_slice, self.window, &mut self.scratch);
        self.max_tail = self.max_tail.max(self.scratch.tail);
        let n = self.scratch.draw(self.rng.gen());
        self.heights.set(f, n);
    }

    pub fn sweep(&mut self) {
        for i in 0..self.order.len() {
            let f = if self.random_scan { self.order[self.rng.gen_range(0..self.order.len())] } else { self.order[i] };
            self.update(f);
        }
        self.sweeps_done += 1;
    }

    pub fn heights(&self) -> &HeightConfig {
        &self.heights
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    /// Largest certified out-of-window mass of any conditional drawn so far.
    pub fn max_tail(&self) -> f64 {
        self.max_tail
    }
}

impl Iterator for ZufChain {
    type Item = HeightConfig;

    fn next(&mut self) -> Option<HeightConfig> {
        if self.remaining == 0 {
            return None;
        }
        while self.sweeps_done < self.burn_in {
            self.sweep();
        }
        for _ in 0..self.thin {
            self.sweep();
        }
        self.remaining -= 1;
        Some(self.heights.clone())
    }
}

/// The first chain of `spec` on `dg`.
pub fn sample_zuf(dg: &DualGraph, spec: &ChainSpec) -> Result<ZufChain, McError> {
    ZufChain::new(dg, spec, 0)
}
