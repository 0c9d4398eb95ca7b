//! Numerical certificates for analytic properties of a potential.

use serde::Serialize;

use crate::{Potential, PotentialError, PotentialKind};

/// Outcome of the complete-monotonicity test on `F(t) = exp(-U(√t))`.
#[derive(Clone, Debug, Serialize)]
pub struct BernsteinReport {
    pub k_max: usize,
    pub t_grid: Vec<f64>,
    /// `min_t (-1)^k F^(k)(t)` for `k = 1..=k_max`.
    pub min_by_order: Vec<f64>,
    /// The same minimum in units of `max(|F^(k)(t)|, F(t)/ℓ^k)`, where `ℓ ≤ t`
    /// is the length over which `F` changes appreciably near `t`.
    pub min_scaled_by_order: Vec<f64>,
    /// Allowed negative excursion, in the units above.
    pub tol: f64,
    /// Largest extrapolation error estimate, in the same units.
    pub precision: f64,
    /// Every `(k, t)` where the scaled value falls below `-tol`.
    pub violations: Vec<(usize, f64)>,
    pub pass: bool,
}

const BERNSTEIN_TOL: f64 = 1e-7;
const MAX_ORDER: usize = 8;
/// A certificate whose derivatives are less accurate than this (relative to
/// their scale) is refused rather than reported.
const MAX_PRECISION: f64 = 1e-3;
/// First step is `STEP_FACTOR · t / k`, so the stencil reaches `(1 ± STEP_FACTOR/2) t`.
const STEP_FACTOR: f64 = 1.6;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `F(t) = exp(-c t^p)`, the form `exp(-U(√t))` takes for the Gaussian
/// (`c = λ/2`, `p = 1`) and the power law (`c = λ`, `p = α/2`).
#[derive(Clone, Copy, Debug)]
struct Stretched {
    c: f64,
    p: f64,
}

impl Stretched {
    fn of(u: &Potential) -> Result<Self, PotentialError> {
        match u.kind() {
            PotentialKind::Gaussian { lambda } => Ok(Stretched { c: 0.5 * lambda, p: 1.0 }),
            PotentialKind::Power { lambda, alpha } => Ok(Stretched { c: *lambda, p: 0.5 * alpha }),
            _ => Err(PotentialError::Unsupported(
                "the Bernstein check needs a closed form in √t (Gaussian or power law)".into(),
            )),
        }
    }

    /// Length over which `F` changes appreciably near `t`: the distance to
    /// the origin or the inverse logarithmic slope, whichever is shorter.
    fn length_scale(&self, t: f64) -> f64 {
        let slope = self.c * self.p * t.powf(self.p - 1.0);
        t.min(1.0 / slope)
    }

    fn value(&self, t: f64) -> f64 {
        (-self.c * t.powf(self.p)).exp()
    }

    /// `F(t + x) - F(t)` without cancellation: both the change of the
    /// exponent and the change of the exponential go through `expm1`.
    fn increment(&self, t: f64, x: f64) -> f64 {
        let dg = self.c * t.powf(self.p) * (self.p * (x / t).ln_1p()).exp_m1();
        self.value(t) * (-dg).exp_m1()
    }
}

/// Central `k`-th difference at `t` with step `h`; error `O(h²)`. The
/// stencil weights sum to zero, so only increments from `F(t)` enter.
fn central_difference(f: &Stretched, t: f64, k: usize, h: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let x = (0.5 * k as f64 - j as f64) * h;
        if x != 0.0 {
            acc += sign * binomial(k, j) * f.increment(t, x);
        }
    }
    acc / h.powi(k as i32)
}

/// `F^(k)(t)` by Ridders' extrapolation of central differences, with its
/// error estimate. The step starts at `STEP_FACTOR · ℓ/k` for the local
/// length scale `ℓ ≤ t`, so the stencil stays inside `(0, 2t)`, and shrinks
/// geometrically, with a Neville tableau in `h²` and an early stop once
/// rounding starts to dominate.
fn derivative(f: &Stretched, t: f64, k: usize) -> (f64, f64) {
    const CON: f64 = 1.4;
    const NTAB: usize = 12;
    let con2 = CON * CON;
    let mut h = STEP_FACTOR * f.length_scale(t) / k as f64;
    let mut a = [[0.0f64; NTAB]; NTAB];
    a[0][0] = central_difference(f, t, k, h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = central_difference(f, t, k, h);
        let mut fac = con2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= con2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

/// Checks `(-1)^k F^(k)(t) ≥ 0` for `F(t) = exp(-U(√t))`, `k ≤ k_max` and
/// every `t` in the grid: the Bernstein criterion for `U` to be a mixture of
/// Gaussians in the gradient.
pub fn bernstein_check(u: &Potential, k_max: usize, t_grid: &[f64]) -> Result<BernsteinReport, PotentialError> {
    if k_max == 0 || k_max > MAX_ORDER {
        return Err(PotentialError::Grid(format!("order {k_max} outside 1..={MAX_ORDER}")));
    }
    if t_grid.is_empty() {
        return Err(PotentialError::Grid("empty grid".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(PotentialError::Grid(format!("grid point {t} is not positive")));
    }
    let f = Stretched::of(u)?;
    let mut precision = 0.0f64;
    let mut min_by_order = vec![f64::INFINITY; k_max];
    let mut min_scaled_by_order = vec![f64::INFINITY; k_max];
    let mut violations = Vec::new();
    for &t in t_grid {
        let ft = f.value(t);
        if !(ft > f64::MIN_POSITIVE) {
            return Err(PotentialError::Grid(format!("F({t}) underflows; shrink the grid")));
        }
        for k in 1..=k_max {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let (d, err) = derivative(&f, t, k);
            let d = sign * d;
            let scale = d.abs().max(ft / f.length_scale(t).powi(k as i32));
            precision = precision.max(err / scale);
            min_by_order[k - 1] = min_by_order[k - 1].min(d);
            min_scaled_by_order[k - 1] = min_scaled_by_order[k - 1].min(d / scale);
            if d / scale < -BERNSTEIN_TOL {
                violations.push((k, t));
            }
        }
    }
    if precision > MAX_PRECISION {
        return Err(PotentialError::Grid(format!(
            "derivatives only resolved to {precision:.1e} of their scale"
        )));
    }
    let pass = min_scaled_by_order.iter().all(|&m| m >= -BERNSTEIN_TOL);
    Ok(BernsteinReport {
        k_max,
        t_grid: t_grid.to_vec(),
        min_by_order,
        min_scaled_by_order,
        tol: BERNSTEIN_TOL,
        precision,
        violations,
        pass,
    })
}

/// `U(q+1) - 2U(q) + U(q-1) ≥ -1e-12` for all `|q| ≤ window`.
pub fn convexity_check(u: &Potential, window: usize) -> bool {
    let w = window as i64;
    (-w..=w).all(|q| u.eval(q + 1) - 2.0 * u.eval(q) + u.eval(q - 1) >= -1e-12)
}

/// `G_U(φ) = Σ_{|m| ≤ m_max} exp(-imφ - U(m))`, real because `U` is even.
pub fn fourier_symbol(u: &Potential, phi: f64, m_max: usize) -> f64 {
    let w = m_max as i64;
    (-w..=w).map(|m| (m as f64 * phi).cos() * u.weight(m)).sum()
}
