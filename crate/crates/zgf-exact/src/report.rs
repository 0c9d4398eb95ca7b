//! The common record every numerical check produces.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One verified relation `lhs (≤ | =) rhs`.
///
/// For inequalities `slack = rhs - lhs`; for equalities `slack` is minus the
/// relative discrepancy. Either way the check passes iff `slack ≥ -tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub inputs_digest: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub tail_estimate: f64,
}

/// Hex SHA-256 of the JSON encoding of `inputs`.
pub fn inputs_digest<T: Serialize + ?Sized>(inputs: &T) -> String {
    let text = serde_json::to_string(inputs).expect("check inputs serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl CheckReport {
    /// `lhs ≤ rhs` up to `tolerance`.
    pub fn le(name: &str, digest: String, lhs: f64, rhs: f64, tolerance: f64, tail: f64) -> Self {
        let slack = rhs - lhs;
        CheckReport {
            check_name: name.to_string(),
            inputs_digest: digest,
            lhs,
            rhs,
            slack,
            tolerance,
            pass: slack >= -tolerance,
            tail_estimate: tail,
        }
    }

    /// `lhs ≥ rhs` up to `tolerance`; stored with `slack = lhs - rhs`.
    pub fn ge(name: &str, digest: String, lhs: f64, rhs: f64, tolerance: f64, tail: f64) -> Self {
        let mut r = Self::le(name, digest, rhs, lhs, tolerance, tail);
        r.lhs = lhs;
        r.rhs = rhs;
        r
    }

    /// `lhs = rhs` to relative `tolerance`.
    pub fn equal(name: &str, digest: String, lhs: f64, rhs: f64, tolerance: f64, tail: f64) -> Self {
        let scale = rhs.abs().max(f64::MIN_POSITIVE);
        let slack = if lhs == rhs { 0.0 } else { -(lhs - rhs).abs() / scale };
        CheckReport {
            check_name: name.to_string(),
            inputs_digest: digest,
            lhs,
            rhs,
            slack,
            tolerance,
            pass: slack >= -tolerance,
            tail_estimate: tail,
        }
    }

    /// `lhs = rhs` to absolute `tolerance`.
    pub fn equal_abs(name: &str, digest: String, lhs: f64, rhs: f64, tolerance: f64, tail: f64) -> Self {
        let slack = -(lhs - rhs).abs();
        CheckReport {
            check_name: name.to_string(),
            inputs_digest: digest,
            lhs,
            rhs,
            slack,
            tolerance,
            pass: slack >= -tolerance,
            tail_estimate: tail,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = inputs_digest(&(1, 2.5, "x"));
        assert_eq!(a, inputs_digest(&(1, 2.5, "x")));
        assert_ne!(a, inputs_digest(&(1, 2.5, "y")));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn slack_conventions() {
        let r = CheckReport::le("t", String::new(), 1.0, 1.5, 1e-9, 0.0);
        assert_eq!(r.slack, 0.5);
        assert!(r.pass);
        let r = CheckReport::ge("t", String::new(), 1.0, 1.5, 1e-9, 0.0);
        assert_eq!(r.slack, -0.5);
        assert!(!r.pass);
        let r = CheckReport::equal("t", String::new(), 2.0 + 1e-7, 2.0, 1e-6, 0.0);
        assert!(r.pass && r.slack < 0.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = CheckReport::le("t", "d".into(), 0.1 + 0.2, 1.0 / 3.0, 1e-9, 1e-17);
        let back: CheckReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
