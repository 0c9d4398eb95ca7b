//! The wrapped Gaussian `Σ_m exp(-β(θ + 2πm)²/2)`, which is the Villain edge
//! weight, and the rule for truncating its sum.

use std::f64::consts::PI;

/// Relative size of the dropped tail allowed when truncating a wrapped sum.
pub const WRAPPED_TAIL_TOL: f64 = 1e-14;

/// Smallest `M` such that dropping `|m| > M` costs at most `tol` relative to
/// the retained sum, uniformly in `θ`.
///
/// With `θ` reduced to `[-π, π]` the retained sum is at least the nearest
/// term, `exp(-βπ²/2)`. A dropped term has `|θ + 2πm| ≥ a = 2π(M+1) - π`, and
/// consecutive dropped terms shrink by at least `exp(-2πβa)`, so the two
/// tails together are bounded by `2 exp(-βa²/2) / (1 - exp(-2πβa))`.
pub fn wrapped_gaussian_terms(beta: f64, tol: f64) -> usize {
    assert!(beta > 0.0 && tol > 0.0);
    let floor = -0.5 * beta * PI * PI + tol.ln();
    (0usize..)
        .find(|&m| {
            let a = 2.0 * PI * (m as f64 + 1.0) - PI;
            let log_tail = (2.0f64).ln() - 0.5 * beta * a * a - (-(-2.0 * PI * beta * a).exp()).ln_1p();
            log_tail <= floor
        })
        .expect("the tail bound decreases to zero")
}

/// The Villain weight `Σ_{|m| ≤ M} exp(-β(θ + 2πm)²/2)` with `M` from
/// [`wrapped_gaussian_terms`].
pub fn villain_weight(theta: f64, beta: f64) -> f64 {
    wrapped_gaussian_sum(theta, beta, wrapped_gaussian_terms(beta, WRAPPED_TAIL_TOL))
}

/// `Σ_{|m| ≤ m_max} exp(-β(θ + 2πm)²/2)` with `θ` first reduced to `[-π, π]`.
/// Callers that evaluate many angles at one `β` find `m_max` once.
pub fn wrapped_gaussian_sum(theta: f64, beta: f64, m_max: usize) -> f64 {
    let m_max = m_max as i64;
    let t = theta.rem_euclid(2.0 * PI);
    let t = if t > PI { t - 2.0 * PI } else { t };
    (-m_max..=m_max)
        .map(|m| {
            let d = t + 2.0 * PI * m as f64;
            (-0.5 * beta * d * d).exp()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_is_invisible_at_double_precision() {
        for beta in [0.05, 0.5, 1.0, 4.0] {
            let m = wrapped_gaussian_terms(beta, WRAPPED_TAIL_TOL) as i64;
            for theta in [0.0, 1.0, PI, -2.5] {
                let short = villain_weight(theta, beta);
                let long: f64 = (-(m + 20)..=(m + 20))
                    .map(|k| {
                        let d = theta + 2.0 * PI * k as f64;
                        (-0.5 * beta * d * d).exp()
                    })
                    .sum();
                assert!(((short - long) / long).abs() < 1e-13, "β={beta} θ={theta}");
            }
        }
    }

    #[test]
    fn weight_is_periodic_and_even() {
        let b = 0.7;
        assert!((villain_weight(0.3, b) - villain_weight(0.3 + 2.0 * PI, b)).abs() < 1e-14);
        assert!((villain_weight(0.3, b) - villain_weight(-0.3, b)).abs() < 1e-14);
    }
}
