//! Lattice Gaussian fields and the Regev–Stephens-Davidowitz inequalities.
//!
//! A field `ψ` on a lattice `ℒ ⊆ ℤ^k` has weight `exp(-⟨ψ, Aψ⟩/2)`. The
//! lattices handled here are those cut out of `ℤ^k` by three kinds of
//! constraint: coordinate `i` is a multiple of `s_i`, coordinates `i` and `j`
//! are equal, coordinate `i` is zero. Each equality class with no zero in it
//! then ranges over `g·ℤ`, `g` the lcm of the class's scalings, and the
//! lattice is spanned by the vectors `g·1_class`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use zgf_graph::DualGraph;
use zgf_potential::Potential;

use crate::report::{inputs_digest, CheckReport};
use crate::sites::{escalate, SiteModel, DEFAULT_BUDGET, DEFAULT_K};
use crate::zuf::height_model;
use crate::ExactError;

/// Largest number of lattice points summed in one evaluation.
pub const POINT_BUDGET: usize = 10_000_000;
/// Eigenvalue floor for positive semi-definiteness.
const PSD_FLOOR: f64 = -1e-10;
/// Inequality slack tolerance.
pub const RSD_TOL: f64 = 1e-9;
/// Truncation tail the inequality checks demand.
pub const RSD_TAIL: f64 = 1e-10;
/// Tail the window escalation aims for.
const TAIL_AIM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub scaling: Vec<i64>,
    pub equal: Vec<(usize, usize)>,
    pub zero: Vec<usize>,
    /// The quadratic form, row-major.
    pub a: Vec<Vec<f64>>,
    /// Each class coefficient ranges over `[-window, window]` to start with.
    pub window: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn to_matrix(a: &[Vec<f64>]) -> DMatrix<f64> {
    let k = a.len();
    DMatrix::from_fn(k, k, |i, j| a[i][j])
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// `true` when the symmetric matrix is positive semi-definite up to the
/// eigenvalue floor.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    min_eigenvalue(m) >= PSD_FLOOR
}

/// Free equality classes: their members and their generator `g`.
#[derive(Clone, Debug, PartialEq)]
struct Classes {
    free: Vec<(Vec<usize>, i64)>,
    /// Index into `free` of every coordinate, `None` if it is held at 0.
    of: Vec<Option<usize>>,
}

impl LatticeModel {
    /// `ℤ^k` with form `a`, which must be symmetric and positive
    /// semi-definite.
    pub fn new(a: Vec<Vec<f64>>) -> Result<Self, ExactError> {
        let k = a.len();
        if a.iter().any(|row| row.len() != k) {
            return Err(ExactError::Precondition("quadratic form must be square".into()));
        }
        let m = to_matrix(&a);
        let scale = m.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        for i in 0..k {
            for j in 0..k {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale || !m[(i, j)].is_finite() {
                    return Err(ExactError::Precondition("quadratic form must be symmetric".into()));
                }
            }
        }
        if !is_psd(&m) {
            return Err(ExactError::Precondition(format!(
                "quadratic form is not positive semi-definite (eigenvalue {})",
                min_eigenvalue(&m)
            )));
        }
        Ok(LatticeModel { scaling: vec![1; k], equal: Vec::new(), zero: Vec::new(), a, window: 12 })
    }

    /// The Gaussian height model `λ/2 Σ J_e (n_x - n_y)²` on the interior
    /// faces of `dg`, one coordinate per interior face in id order.
    pub fn from_dual(dg: &DualGraph, lambda: f64) -> Result<Self, ExactError> {
        let lap = crate::gaussian::dirichlet_laplacian(dg);
        Self::new(from_matrix(&(lap * lambda)))
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn scaled(mut self, i: usize, s: i64) -> Self {
        assert!(s > 0, "scalings must be positive");
        self.scaling[i] = lcm(self.scaling[i], s);
        self
    }

    pub fn with_equal(mut self, i: usize, j: usize) -> Self {
        self.equal.push((i, j));
        self
    }

    pub fn with_zero(mut self, i: usize) -> Self {
        self.zero.push(i);
        self
    }

    pub fn with_window(mut self, k: i64) -> Self {
        self.window = k;
        self
    }

    /// The same lattice with another form.
    pub fn with_form(&self, a: Vec<Vec<f64>>) -> Result<Self, ExactError> {
        let base = LatticeModel::new(a)?;
        if base.dim() != self.dim() {
            return Err(ExactError::Precondition("form has the wrong dimension".into()));
        }
        Ok(LatticeModel { a: base.a, ..self.clone() })
    }

    pub fn form(&self) -> DMatrix<f64> {
        to_matrix(&self.a)
    }

    fn classes(&self) -> Classes {
        let k = self.dim();
        let mut parent: Vec<usize> = (0..k).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j) in &self.equal {
            let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
            parent[ri.max(rj)] = ri.min(rj);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..k {
            groups.entry(root(&mut parent, i)).or_default().push(i);
        }
        let mut free = Vec::new();
        let mut of = vec![None; k];
        for (_, members) in groups {
            if members.iter().any(|i| self.zero.contains(i)) {
                continue;
            }
            let g = members.iter().fold(1, |g, &i| lcm(g, self.scaling[i]));
            for &i in &members {
                of[i] = Some(free.len());
            }
            free.push((members, g));
        }
        Classes { free, of }
    }

    /// `true` when every generator of `self` lies in `other`.
    pub fn is_sublattice_of(&self, other: &LatticeModel) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let mine = self.classes();
        let theirs = other.classes();
        mine.free.iter().all(|(members, g)| {
            let in_class = |i: usize| members.contains(&i);
            members.iter().all(|&i| theirs.of[i].is_some() && g % other.scaling[i] == 0)
                && theirs
                    .free
                    .iter()
                    .all(|(d, _)| d.iter().all(|&i| in_class(i)) || d.iter().all(|&i| !in_class(i)))
        })
    }

    /// `ℒ ∩ 𝓜`: all constraints of both.
    pub fn intersection(&self, other: &LatticeModel) -> Result<LatticeModel, ExactError> {
        if self.dim() != other.dim() {
            return Err(ExactError::Precondition("lattices of different dimension".into()));
        }
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.scaling[i] = lcm(self.scaling[i], other.scaling[i]);
        }
        out.equal.extend(other.equal.iter().copied());
        out.zero.extend(other.zero.iter().copied());
        out.window = self.window.max(other.window);
        Ok(out)
    }

    /// Basis matrix: one column `g·1_class` per free class.
    fn basis(&self, c: &Classes) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.dim(), c.free.len());
        for (j, (members, g)) in c.free.iter().enumerate() {
            for &i in members {
                b[(i, j)] = *g as f64;
            }
        }
        b
    }
}

/// Weighted sums over the truncated lattice at one tilt.
#[derive(Clone, Debug)]
struct Sums {
    log_z: f64,
    /// `E_u[ψ]`.
    mean: DVector<f64>,
    /// `E_u[ψψᵀ]`.
    second: DMatrix<f64>,
    /// Weight share of the outermost shell.
    tail: f64,
}

/// Sums of `exp(-⟨ψ,Aψ⟩/2 + ⟨u,ψ⟩)` over class coefficients in `[-k, k]`,
/// in the reduced coordinates `ψ = B m`.
fn sums(model: &LatticeModel, a: &DMatrix<f64>, u: &DVector<f64>, k: i64) -> Result<Sums, ExactError> {
    let c = model.classes();
    let b = model.basis(&c);
    let dim = model.dim();
    let nc = c.free.len();
    let side = (2 * k + 1) as usize;
    let points = (0..nc).try_fold(1usize, |acc, _| acc.checked_mul(side)).unwrap_or(usize::MAX);
    if points > POINT_BUDGET {
        return Err(ExactError::BudgetExceeded { needed: points, budget: POINT_BUDGET });
    }
    let q = b.transpose() * a * &b;
    if nc > 0 && min_eigenvalue(&q) <= 1e-12 {
        return Err(ExactError::Precondition(
            "the form is degenerate on the lattice: the sum diverges".into(),
        ));
    }
    let w = b.transpose() * u;
    let exponent = |m: &[i64]| -> f64 {
        let mut e = 0.0;
        for i in 0..nc {
            let mi = m[i] as f64;
            e += w[i] * mi;
            for j in 0..nc {
                e -= 0.5 * q[(i, j)] * mi * m[j] as f64;
            }
        }
        e
    };
    let visit = |f: &mut dyn FnMut(&[i64])| {
        let mut m = vec![-k; nc];
        loop {
            f(&m);
            let mut i = 0;
            loop {
                if i == nc {
                    return;
                }
                m[i] += 1;
                if m[i] <= k {
                    break;
                }
                m[i] = -k;
                i += 1;
            }
        }
    };
    let mut top = f64::NEG_INFINITY;
    visit(&mut |m| top = top.max(exponent(m)));
    let mut z = 0.0;
    let mut shell = 0.0;
    let mut first = DVector::zeros(nc);
    let mut second = DMatrix::zeros(nc, nc);
    visit(&mut |m| {
        let p = (exponent(m) - top).exp();
        z += p;
        if m.iter().any(|x| x.abs() == k) {
            shell += p;
        }
        for i in 0..nc {
            first[i] += p * m[i] as f64;
            for j in 0..nc {
                second[(i, j)] += p * (m[i] * m[j]) as f64;
            }
        }
    });
    let mean = &b * (first / z);
    let second = &b * (second / z) * b.transpose();
    debug_assert_eq!(mean.len(), dim);
    Ok(Sums { log_z: top + z.ln(), mean, second, tail: shell / z })
}

/// Evaluates `sums` at every tilt on a common window, widening it by 4 until
/// all tails fall below the aim or the point budget is reached.
fn sums_escalated(model: &LatticeModel, a: &DMatrix<f64>, tilts: &[DVector<f64>]) -> Result<Vec<Sums>, ExactError> {
    let mut k = model.window.max(1);
    let mut best = None;
    loop {
        let res: Result<Vec<Sums>, ExactError> = tilts.iter().map(|u| sums(model, a, u, k)).collect();
        match res {
            Ok(s) => {
                let done = s.iter().all(|x| x.tail < TAIL_AIM);
                best = Some(s);
                if done {
                    break;
                }
            }
            Err(e) if e.is_budget() && best.is_some() => break,
            Err(e) => return Err(e),
        }
        k += 4;
    }
    Ok(best.unwrap())
}

/// `𝕄[v]` with its tail certificate and the window used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfValue {
    pub value: f64,
    pub tail: f64,
}

fn vector(v: &[f64], dim: usize) -> Result<DVector<f64>, ExactError> {
    if v.len() != dim {
        return Err(ExactError::Precondition(format!("vector of length {} for dimension {dim}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

/// `𝕄_{A,ℒ}[v] = E[exp⟨v, ψ⟩]`.
pub fn lattice_mgf(m: &LatticeModel, v: &[f64]) -> Result<MgfValue, ExactError> {
    let v = vector(v, m.dim())?;
    let zero = DVector::zeros(m.dim());
    let s = sums_escalated(m, &m.form(), &[v, zero])?;
    Ok(MgfValue { value: (s[0].log_z - s[1].log_z).exp(), tail: s[0].tail.max(s[1].tail) })
}

/// `log Z_{A,ℒ}` with its tail.
fn log_partition(m: &LatticeModel) -> Result<(f64, f64), ExactError> {
    let s = sums_escalated(m, &m.form(), &[DVector::zeros(m.dim())])?;
    Ok((s[0].log_z, s[0].tail))
}

/// Outcome of a battery of inequality checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsdReport {
    pub checks: Vec<CheckReport>,
}

impl RsdReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.check_name == name)
    }
}

fn certified(mut r: CheckReport) -> CheckReport {
    r.pass &= r.tail_estimate < RSD_TAIL;
    r
}

#[derive(Serialize)]
struct SuiteInputs<'a> {
    lattice: &'a LatticeModel,
    sub: &'a LatticeModel,
    b: &'a [Vec<f64>],
    u: &'a [f64],
    v: &'a [f64],
}

/// Every lattice inequality on one instance:
///
/// * `pythagoras`: `𝕄[u]𝕄[v] ≤ √(𝕄[u+v]𝕄[u-v])`;
/// * `sublattice`: `𝕄_𝓜[v] ≤ 𝕄_ℒ[v]`;
/// * `matrix`: `𝕄_A[v] ≤ 𝕄_B[v]` for `A ≥ B`;
/// * `hessian`: smallest eigenvalue of
///   `H𝕄[u]/𝕄[u] - H𝕄[0] - ∇𝕄[u]∇𝕄[u]ᵀ/𝕄[u]²` is `≥ 0`;
/// * `correlation`: `E[e^{⟨u,ψ⟩}⟨ψ,Mψ⟩] ≥ 𝕄[u] E[⟨ψ,Mψ⟩]` with `M = A - B`.
///
/// `lattice` carries `A`; `sub` must be a sublattice of it (its own form is
/// ignored); `A - B` must be positive semi-definite.
pub fn rsd_suite(
    lattice: &LatticeModel,
    sub: &LatticeModel,
    b: &[Vec<f64>],
    u: &[f64],
    v: &[f64],
) -> Result<RsdReport, ExactError> {
    let k = lattice.dim();
    if !sub.is_sublattice_of(lattice) {
        return Err(ExactError::Precondition("the second lattice is not a sublattice of the first".into()));
    }
    let lat_b = lattice.with_form(b.to_vec())?;
    let am = lattice.form();
    let bm = lat_b.form();
    let diff = &am - &bm;
    if !is_psd(&diff) {
        return Err(ExactError::Precondition("A - B is not positive semi-definite".into()));
    }
    let digest = inputs_digest(&SuiteInputs { lattice, sub, b, u, v });
    let uu = vector(u, k)?;
    let vv = vector(v, k)?;
    let zero = DVector::zeros(k);
    let mut checks = Vec::new();

    // Everything on (A, ℒ) at one window.
    let s = sums_escalated(lattice, &am, &[zero.clone(), uu.clone(), vv.clone(), &uu + &vv, &uu - &vv])?;
    let tail = s.iter().map(|x| x.tail).fold(0.0, f64::max);
    let mgf = |i: usize| (s[i].log_z - s[0].log_z).exp();
    checks.push(certified(CheckReport::le(
        "pythagoras",
        digest.clone(),
        mgf(1) * mgf(2),
        (mgf(3) * mgf(4)).sqrt(),
        RSD_TOL,
        tail,
    )));

    let sub_a = LatticeModel { a: lattice.a.clone(), ..sub.clone() };
    let sm = sums_escalated(&sub_a, &am, &[zero.clone(), vv.clone()])?;
    checks.push(certified(CheckReport::le(
        "sublattice",
        digest.clone(),
        (sm[1].log_z - sm[0].log_z).exp(),
        mgf(2),
        RSD_TOL,
        tail.max(sm[0].tail).max(sm[1].tail),
    )));

    let sb = sums_escalated(&lat_b, &bm, &[zero.clone(), vv.clone()])?;
    checks.push(certified(CheckReport::le(
        "matrix",
        digest.clone(),
        mgf(2),
        (sb[1].log_z - sb[0].log_z).exp(),
        RSD_TOL,
        tail.max(sb[0].tail).max(sb[1].tail),
    )));

    let h = &s[1].second - &s[0].second - &s[1].mean * s[1].mean.transpose();
    let h = (&h + h.transpose()) * 0.5;
    let lam = min_eigenvalue(&h);
    checks.push(certified(CheckReport::ge("hessian", digest.clone(), lam, 0.0, RSD_TOL, tail)));

    let trace = |m: &DMatrix<f64>| (&diff * m).trace();
    checks.push(certified(CheckReport::ge(
        "correlation",
        digest,
        mgf(1) * trace(&s[1].second),
        mgf(1) * trace(&s[0].second),
        RSD_TOL,
        tail,
    )));
    Ok(RsdReport { checks })
}

/// `Z_𝓜 Z_𝓝 ≤ Z_ℒ Z_{𝓜∩𝓝}` for sublattices `𝓜, 𝓝` of `ℒ` (all with the
/// form of `ℒ`). Compared in logarithms.
pub fn submodularity_check(
    lattice: &LatticeModel,
    m: &LatticeModel,
    n: &LatticeModel,
) -> Result<CheckReport, ExactError> {
    if !m.is_sublattice_of(lattice) || !n.is_sublattice_of(lattice) {
        return Err(ExactError::Precondition("submodularity needs two sublattices".into()));
    }
    let with_a = |x: &LatticeModel| LatticeModel { a: lattice.a.clone(), ..x.clone() };
    let mn = with_a(m).intersection(&with_a(n))?;
    let digest = inputs_digest(&(lattice, m, n));
    let (zl, tl) = log_partition(lattice)?;
    let (zm, tm) = log_partition(&with_a(m))?;
    let (zn, tn) = log_partition(&with_a(n))?;
    let (zmn, tmn) = log_partition(&mn)?;
    let lhs = zm + zn;
    let rhs = zl + zmn;
    Ok(certified(CheckReport::le("submodularity", digest, lhs, rhs, RSD_TOL, tl.max(tm).max(tn).max(tmn))))
}

#[derive(Serialize)]
struct AnnealedInputs<'a> {
    potential: &'a Potential,
    faces: usize,
    merges: &'a [Vec<usize>],
    v: &'a [f64],
}

fn tilted(base: &SiteModel, v: &[f64]) -> SiteModel {
    let mut m = base.clone();
    for (f, &t) in v.iter().enumerate() {
        m.set_tilt(f, t);
    }
    m
}

/// `𝕄^ℒ[v] ≥ 𝕄^𝓜[v]` for the height model of `dg` with potential `u`, `𝓜`
/// being the sublattice on which each group in `merges` takes one value.
/// `v` is indexed by face id; its entry on the outer face is irrelevant.
pub fn annealed_rsd_check(
    dg: &DualGraph,
    u: &Potential,
    merges: &[Vec<usize>],
    v: &[f64],
) -> Result<CheckReport, ExactError> {
    if v.len() != dg.num_faces() {
        return Err(ExactError::Precondition(format!("need one tilt per face ({})", dg.num_faces())));
    }
    let digest = inputs_digest(&AnnealedInputs { potential: u, faces: dg.num_faces(), merges, v });
    let full = height_model(dg, u, &BTreeMap::new())?;
    let mut sub = full.clone();
    for group in merges {
        for w in group.windows(2) {
            sub.merge(w[0], w[1]);
        }
    }
    let models = [tilted(&full, v), full.clone(), tilted(&sub, v), sub];
    let refs: Vec<&SiteModel> = models.iter().collect();
    let t = escalate(&refs, DEFAULT_K, TAIL_AIM, DEFAULT_BUDGET)?;
    let tail = t.iter().map(|x| x.tail).fold(0.0, f64::max);
    let lhs = (t[0].log_z - t[1].log_z).exp();
    let rhs = (t[2].log_z - t[3].log_z).exp();
    Ok(certified(CheckReport::ge("annealed-sublattice", digest, lhs, rhs, RSD_TOL, tail)))
}

/// `P[n_x = n_y, n_u = n_v] ≥ P[n_x = n_y] P[n_u = n_v]`, i.e.
/// `Z Z_{xy,uv} ≥ Z_{xy} Z_{uv}` for the merged partition functions,
/// compared in logarithms.
pub fn equality_correlation_check(
    dg: &DualGraph,
    u: &Potential,
    xy: (usize, usize),
    uv: (usize, usize),
) -> Result<CheckReport, ExactError> {
    let digest = inputs_digest(&(u, dg.num_faces(), xy, uv));
    let base = height_model(dg, u, &BTreeMap::new())?;
    let mut m_xy = base.clone();
    m_xy.merge(xy.0, xy.1);
    let mut m_uv = base.clone();
    m_uv.merge(uv.0, uv.1);
    let mut m_both = m_xy.clone();
    m_both.merge(uv.0, uv.1);
    let t = escalate(&[&base, &m_xy, &m_uv, &m_both], DEFAULT_K, TAIL_AIM, DEFAULT_BUDGET)?;
    let tail = t.iter().map(|x| x.tail).fold(0.0, f64::max);
    Ok(certified(CheckReport::ge(
        "equality-correlation",
        digest,
        t[0].log_z + t[3].log_z,
        t[1].log_z + t[2].log_z,
        RSD_TOL,
        tail,
    )))
}
