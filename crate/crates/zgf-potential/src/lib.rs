//! Edge interaction potentials for integer-valued height functions.
//!
//! A potential `U` assigns an energy to each integer gradient `q = n_u - n_v`
//! and enters the Gibbs weight as `exp(-U(q))`. Every supported family is
//! even and normalized so that `U(0) = 0`.

pub mod bessel;
mod checks;
mod spec;
mod wrapped;

pub use bessel::{bessel_i, log_bessel_i, log_bessel_i_table};
pub use checks::{bernstein_check, convexity_check, fourier_symbol, BernsteinReport};
pub use wrapped::{villain_weight, wrapped_gaussian_sum, wrapped_gaussian_terms, WRAPPED_TAIL_TOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradients `|q| ≤ CACHE_WINDOW` are evaluated once at construction.
pub const CACHE_WINDOW: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation not supported for this potential: {0}")]
    Unsupported(String),
    #[error("cannot parse potential spec `{0}`")]
    Parse(String),
    #[error("finite-difference grid unusable: {0}")]
    Grid(String),
}

/// The analytic family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialKind {
    /// `U(q) = λ q² / 2`.
    Gaussian { lambda: f64 },
    /// `U(m) = -log(I_m(β) / I_0(β))`, the dual of the XY model.
    Bessel { beta: f64 },
    /// `U(q) = λ |q|^α`.
    Power { lambda: f64, alpha: f64 },
    /// `U(q) = values[|q|] - values[0]`, extended linearly past the table.
    Tabulated { values: Vec<f64>, tail_slope: f64 },
}

/// An even edge potential with its small-gradient values cached.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PotentialKind", into = "PotentialKind")]
pub struct Potential {
    kind: PotentialKind,
    cache: Vec<f64>,
    divisibility: Option<u32>,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl From<Potential> for PotentialKind {
    fn from(p: Potential) -> Self {
        p.kind
    }
}

impl TryFrom<PotentialKind> for Potential {
    type Error = PotentialError;
    fn try_from(kind: PotentialKind) -> Result<Self, Self::Error> {
        Potential::new(kind)
    }
}

fn positive(name: &str, x: f64) -> Result<(), PotentialError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(PotentialError::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
    }
}

impl Potential {
    pub fn new(kind: PotentialKind) -> Result<Self, PotentialError> {
        match &kind {
            PotentialKind::Gaussian { lambda } => positive("λ", *lambda)?,
            PotentialKind::Bessel { beta } => positive("β", *beta)?,
            PotentialKind::Power { lambda, alpha } => {
                positive("λ", *lambda)?;
                positive("α", *alpha)?;
            }
            PotentialKind::Tabulated { values, tail_slope } => {
                if values.is_empty() {
                    return Err(PotentialError::InvalidParameter("empty table".into()));
                }
                if values.iter().any(|v| !v.is_finite()) || !tail_slope.is_finite() || *tail_slope < 0.0 {
                    return Err(PotentialError::InvalidParameter(
                        "table entries must be finite and the tail slope non-negative".into(),
                    ));
                }
            }
        }
        let cache = match &kind {
            PotentialKind::Bessel { beta } => {
                let t = log_bessel_i_table(CACHE_WINDOW, *beta)?;
                (0..=CACHE_WINDOW).map(|q| t[CACHE_WINDOW] - t[CACHE_WINDOW + q]).collect()
            }
            _ => (0..=CACHE_WINDOW).map(|q| raw_eval(&kind, q as u64)).collect(),
        };
        Ok(Potential { kind, cache, divisibility: None })
    }

    pub fn gaussian(lambda: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Gaussian { lambda })
    }

    pub fn bessel(beta: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Bessel { beta })
    }

    pub fn power(lambda: f64, alpha: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Power { lambda, alpha })
    }

    pub fn tabulated(values: Vec<f64>, tail_slope: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Tabulated { values, tail_slope })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Every supported family is even.
    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// The `r` for which this potential was produced as an `r`-th
    /// convolution root, if any.
    pub fn divisibility_order(&self) -> Option<u32> {
        self.divisibility
    }

    /// `U(q)`, normalized so that `U(0) = 0`. Returns `+∞` when the weight
    /// underflows.
    pub fn eval(&self, q: i64) -> f64 {
        let a = q.unsigned_abs();
        if (a as usize) <= CACHE_WINDOW {
            return self.cache[a as usize];
        }
        match &self.kind {
            PotentialKind::Bessel { beta } => {
                let u = -bessel::log_bessel_ratio(q, *beta);
                if u.is_nan() {
                    f64::INFINITY
                } else {
                    u
                }
            }
            k => raw_eval(k, a),
        }
    }

    /// The Gibbs weight `exp(-U(q))`.
    pub fn weight(&self, q: i64) -> f64 {
        (-self.eval(q)).exp()
    }

    /// `U` at a real argument, for the families with a closed form in `|x|`.
    pub fn eval_real(&self, x: f64) -> Result<f64, PotentialError> {
        match &self.kind {
            PotentialKind::Gaussian { lambda } => Ok(0.5 * lambda * x * x),
            PotentialKind::Power { lambda, alpha } => Ok(lambda * x.abs().powf(*alpha)),
            _ => Err(PotentialError::Unsupported(
                "real-argument evaluation needs a Gaussian or power-law potential".into(),
            )),
        }
    }
}

fn raw_eval(kind: &PotentialKind, a: u64) -> f64 {
    let x = a as f64;
    match kind {
        PotentialKind::Gaussian { lambda } => 0.5 * lambda * x * x,
        PotentialKind::Power { lambda, alpha } => lambda * x.powf(*alpha),
        PotentialKind::Tabulated { values, tail_slope } => {
            let last = values.len() - 1;
            let base = values[0];
            if (a as usize) <= last {
                values[a as usize] - base
            } else {
                values[last] - base + tail_slope * (x - last as f64)
            }
        }
        PotentialKind::Bessel { beta } => -bessel::log_bessel_ratio(a as i64, *beta),
    }
}

/// A potential `Ũ` whose `r`-fold convolution power reproduces `exp(-U)` up
/// to a constant factor.
///
/// For the Gaussian the convolution is the continuous one on `ℝ` (`λ̃ = rλ`);
/// for the Bessel family it is the discrete one on `ℤ` (`β̃ = β/r`), exact by
/// the addition theorem `I_n(β₁+β₂) = Σ_l I_{n-l}(β₁) I_l(β₂)`.
pub fn divisibility_factor(u: &Potential, r: u32) -> Result<Potential, PotentialError> {
    if r == 0 {
        return Err(PotentialError::InvalidParameter("r must be at least 1".into()));
    }
    if r == 1 {
        return Ok(u.clone());
    }
    let mut out = match u.kind() {
        PotentialKind::Gaussian { lambda } => Potential::gaussian(lambda * r as f64)?,
        PotentialKind::Bessel { beta } => Potential::bessel(beta / r as f64)?,
        other => {
            return Err(PotentialError::Unsupported(format!(
                "no exact convolution root for {}",
                spec::family_name(other)
            )))
        }
    };
    out.divisibility = Some(r);
    Ok(out)
}

/// The convolution `Σ_l a(l) b(q-l)` of two weight sequences supported on
/// `[-w, w]`, returned on `[-2w, 2w]`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    assert!(a.len() % 2 == 1, "weights must be centred on an odd window");
    let n = a.len();
    let mut out = vec![0.0; 2 * n - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `exp(-U(q))` for `q ∈ [-w, w]`.
pub fn weights_on_window(u: &Potential, w: usize) -> Vec<f64> {
    let w = w as i64;
    (-w..=w).map(|q| u.weight(q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(Potential::gaussian(1.0).unwrap().eval(2), 2.0);
        assert_eq!(Potential::bessel(1.7).unwrap().eval(0), 0.0);
        assert!((Potential::power(0.5, 1.5).unwrap().eval(4) - 4.0).abs() < 1e-15);
        assert_eq!(Potential::power(0.5, 1.5).unwrap().eval(-4), Potential::power(0.5, 1.5).unwrap().eval(4));
    }

    #[test]
    fn tabulated_extrapolates_linearly() {
        let u = Potential::tabulated(vec![1.0, 1.5, 3.0], 2.0).unwrap();
        assert_eq!(u.eval(0), 0.0);
        assert_eq!(u.eval(-2), 2.0);
        assert_eq!(u.eval(5), 8.0);
        assert_eq!(u.eval(70), 2.0 + 2.0 * 68.0);
    }

    #[test]
    fn bessel_beyond_cache_matches_direct_ratio() {
        let u = Potential::bessel(2.0).unwrap();
        let direct = -bessel::log_bessel_ratio(80, 2.0);
        assert!((u.eval(80) - direct).abs() < 1e-12 * direct);
        assert!(u.weight(400) >= 0.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Potential::gaussian(0.0).is_err());
        assert!(Potential::bessel(-1.0).is_err());
        assert!(Potential::power(1.0, f64::NAN).is_err());
        assert!(Potential::tabulated(vec![], 1.0).is_err());
    }

    #[test]
    fn division_of_unsupported_family_fails() {
        let p = Potential::power(1.0, 1.0).unwrap();
        assert!(matches!(divisibility_factor(&p, 2), Err(PotentialError::Unsupported(_))));
        assert_eq!(divisibility_factor(&p, 1).unwrap(), p);
    }

    #[test]
    fn serde_round_trip_rebuilds_cache() {
        let u = Potential::bessel(1.25).unwrap();
        let text = serde_json::to_string(&u).unwrap();
        assert_eq!(text, r#"{"kind":"bessel","beta":1.25}"#);
        let back: Potential = serde_json::from_str(&text).unwrap();
        assert_eq!(back.eval(3), u.eval(3));
    }
}
