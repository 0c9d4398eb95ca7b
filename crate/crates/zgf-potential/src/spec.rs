//! Text form of potentials, as used on the command line and in configs:
//! `gaussian:l=1.25`, `bessel:b=2.0`, `power:l=1.0,a=1.5`,
//! `tabulated:v=0|0.4|1.1,s=0.8`.

use std::fmt;
use std::str::FromStr;

use crate::{Potential, PotentialError, PotentialKind};

pub(crate) fn family_name(kind: &PotentialKind) -> &'static str {
    match kind {
        PotentialKind::Gaussian { .. } => "gaussian",
        PotentialKind::Bessel { .. } => "bessel",
        PotentialKind::Power { .. } => "power",
        PotentialKind::Tabulated { .. } => "tabulated",
    }
}

impl FromStr for Potential {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PotentialError::Parse(s.to_string());
        let (family, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let mut params: Vec<(&str, &str)> = Vec::new();
        for item in rest.split(',') {
            let (k, v) = item.split_once('=').ok_or_else(bad)?;
            let k = k.trim();
            if params.iter().any(|(seen, _)| *seen == k) {
                return Err(bad());
            }
            params.push((k, v.trim()));
        }
        let take = |key: &str| -> Result<f64, PotentialError> {
            let (_, v) = params.iter().find(|(k, _)| *k == key).ok_or_else(bad)?;
            v.parse::<f64>().map_err(|_| bad())
        };
        let expect_keys = |keys: &[&str]| -> Result<(), PotentialError> {
            if params.len() == keys.len() && params.iter().all(|(k, _)| keys.contains(k)) {
                Ok(())
            } else {
                Err(bad())
            }
        };
        let kind = match family.trim() {
            "gaussian" => {
                expect_keys(&["l"])?;
                PotentialKind::Gaussian { lambda: take("l")? }
            }
            "bessel" => {
                expect_keys(&["b"])?;
                PotentialKind::Bessel { beta: take("b")? }
            }
            "power" => {
                expect_keys(&["l", "a"])?;
                PotentialKind::Power { lambda: take("l")?, alpha: take("a")? }
            }
            "tabulated" => {
                expect_keys(&["v", "s"])?;
                let (_, v) = params.iter().find(|(k, _)| *k == "v").ok_or_else(bad)?;
                let values = v
                    .split('|')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?;
                PotentialKind::Tabulated { values, tail_slope: take("s")? }
            }
            _ => return Err(bad()),
        };
        Potential::new(kind)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            PotentialKind::Gaussian { lambda } => write!(f, "gaussian:l={lambda}"),
            PotentialKind::Bessel { beta } => write!(f, "bessel:b={beta}"),
            PotentialKind::Power { lambda, alpha } => write!(f, "power:l={lambda},a={alpha}"),
            PotentialKind::Tabulated { values, tail_slope } => {
                let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                write!(f, "tabulated:v={},s={tail_slope}", v.join("|"))
            }
        }
    }
}
