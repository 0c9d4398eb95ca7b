use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use zgf_exact::{with_coupling, HeightConfig};
use zgf_graph::{build_square_lattice, dual, subdivide_edges, DualGraph, PlanarGraph};
use zgf_potential::Potential;

use crate::heights::ZufChain;
use crate::spins::{SpinChain, SpinConfig};
use crate::stats::{chain_blocks, pool, Estimate};
use crate::{ChainSpec, McError, ModelSpec};

/// Runs `spec.chains` chains built by `make(stream)` in parallel and
/// estimates each observable by pooled batch means. Stream numbers are
/// `offset, offset + 1, …`, so a study that runs several jobs under one
/// master seed gives each job its own block of streams.
fn estimate<C, S>(
    spec: &ChainSpec,
    offset: u64,
    make: impl Fn(u64) -> Result<C, McError> + Sync,
    observe: impl Fn(&S) -> Vec<f64> + Sync,
) -> Result<Vec<Estimate>, McError>
where
    C: Iterator<Item = S>,
{
    let per_chain: Vec<Vec<Vec<f64>>> = (0..spec.chains as u64)
        .into_par_iter()
        .map(|c| {
            let chain = make(offset + c)?;
            let mut series: Vec<Vec<f64>> = Vec::new();
            for s in chain {
                let obs = observe(&s);
                if series.is_empty() {
                    series = vec![Vec::with_capacity(spec.kept()); obs.len()];
                }
                for (k, v) in obs.into_iter().enumerate() {
                    series[k].push(v);
                }
            }
            Ok(series)
        })
        .collect::<Result<_, McError>>()?;
    let n_obs = per_chain.first().map_or(0, |c| c.len());
    Ok((0..n_obs)
        .map(|k| {
            let blocks: Vec<Vec<f64>> = per_chain.iter().map(|c| chain_blocks(&c[k])).collect();
            pool(&blocks, per_chain.iter().map(|c| c[k].len()).sum())
        })
        .collect())
}

/// Batch-means estimates of `observe` under the height chain of `spec`.
pub(crate) fn estimate_heights(
    dg: &DualGraph,
    spec: &ChainSpec,
    offset: u64,
    observe: impl Fn(&HeightConfig) -> Vec<f64> + Sync,
) -> Result<Vec<Estimate>, McError> {
    estimate(spec, offset, |i| ZufChain::new(dg, spec, i), observe)
}

/// Batch-means estimates of `observe` under the spin chain of `spec`.
pub(crate) fn estimate_spins(
    g: &PlanarGraph,
    spec: &ChainSpec,
    offset: u64,
    observe: impl Fn(&SpinConfig) -> Vec<f64> + Sync,
) -> Result<Vec<Estimate>, McError> {
    estimate(spec, offset, |i| SpinChain::new(g, spec, i), observe)
}

/// Correlations of the `n`-fold refined XY model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    /// `⟨σ_x · σ_y⟩` for each pair, in order.
    pub correlations: Vec<Estimate>,
}

/// Replaces every edge of `g` by `n` edges in series, each with `n` times the
/// coupling, samples the XY model at `beta` there, and estimates the
/// correlations between original vertices. The chain settings other than
/// the model are taken from `spec`.
pub fn metric_xy_refinement(
    g: &PlanarGraph,
    beta: f64,
    n: usize,
    pairs: &[(usize, usize)],
    spec: &ChainSpec,
) -> Result<MetricEstimate, McError> {
    if ![1, 2, 4, 8, 16].contains(&n) {
        return Err(McError::Spec(format!("subdivision count must be 1, 2, 4, 8 or 16, got {n}")));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| *x >= g.num_vertices() || *y >= g.num_vertices()) {
        return Err(McError::Spec(format!("pair ({x}, {y}) is not a pair of original vertices")));
    }
    let refined = subdivide_edges(g, &vec![n as f64; n])?;
    let spec = spec.with_model(ModelSpec::Xy { beta });
    let correlations =
        estimate_spins(&refined, &spec, 0, |s| pairs.iter().map(|&(x, y)| s.dot(x, y)).collect())?;
    Ok(MetricEstimate { n, pairs: pairs.to_vec(), correlations })
}

/// The bounded face nearest to `(½, ½)`: the face of a square box whose
/// lower-left corner is the origin.
pub fn center_face(dg: &DualGraph) -> usize {
    let g = dg.primal();
    *dg.interior_faces()
        .iter()
        .min_by(|&&a, &&b| {
            let d = |f: usize| {
                let c = g.face_centroid(f);
                (c[0] - 0.5).hypot(c[1] - 0.5)
            };
            d(a).total_cmp(&d(b))
        })
        .expect("a box has bounded faces")
}

/// How the centre variance behaves as the box grows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// Every step up in `L` raises the variance by more than `3σ`.
    Growing,
    /// All values agree within `3σ`.
    Flat,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepinningRow {
    pub l: usize,
    pub lambda: f64,
    /// `𝔼[n_c²]` at the centre face.
    pub variance: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepinningTable {
    /// Row-major in `(λ, L)`, each in the order given.
    pub rows: Vec<DepinningRow>,
    pub trends: Vec<(f64, Trend)>,
    /// For each `L`: whether the variance is non-increasing in `λ` within
    /// `3σ` at every step.
    pub monotone_in_lambda: Vec<(usize, bool)>,
}

impl DepinningTable {
    pub fn get(&self, l: usize, lambda: f64) -> Option<&Estimate> {
        self.rows.iter().find(|r| r.l == l && r.lambda == lambda).map(|r| &r.variance)
    }

    pub fn trend(&self, lambda: f64) -> Option<Trend> {
        self.trends.iter().find(|t| t.0 == lambda).map(|t| t.1)
    }
}

fn classify(values: &[Estimate]) -> Trend {
    let grows = values.windows(2).all(|w| w[1].mean - w[0].mean > 3.0 * w[0].combined_sigma(&w[1]));
    if grows {
        return Trend::Growing;
    }
    let flat = values
        .iter()
        .enumerate()
        .all(|(i, a)| values[i + 1..].iter().all(|b| (a.mean - b.mean).abs() <= 3.0 * a.combined_sigma(b)));
    if flat {
        Trend::Flat
    } else {
        Trend::Undetermined
    }
}

/// `𝔼[n_c²]` at the centre face of the square boxes `[-L, L]²` under the
/// potential `base` scaled by each coupling `λ` (for a Gaussian base with
/// `λ = 1` this is the ℤGF at `λ`). Job `(λ_i, L_j)` uses the streams
/// starting at `(i · |L| + j) · chains`.
pub fn depinning_scan(
    ls: &[usize],
    base: &Potential,
    lambdas: &[f64],
    spec: &ChainSpec,
) -> Result<DepinningTable, McError> {
    if ls.is_empty() || ls.windows(2).any(|w| w[0] >= w[1]) || ls[0] == 0 {
        return Err(McError::Spec("box sizes must be positive and increasing".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(McError::Spec("couplings must be positive".into()));
    }
    let boxes: Vec<DualGraph> = ls.iter().map(|&l| dual(&build_square_lattice(l))).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        let job = spec.with_model(ModelSpec::Zuf { potential: with_coupling(base, lambda)? });
        for (j, dg) in boxes.iter().enumerate() {
            let f = center_face(dg);
            let offset = ((i * ls.len() + j) * spec.chains) as u64;
            let est = estimate_heights(dg, &job, offset, |h| vec![(h.get(f) as f64).powi(2)])?;
            rows.push(DepinningRow { l: ls[j], lambda, variance: est[0] });
        }
    }
    let trends = lambdas
        .iter()
        .map(|&lambda| {
            let v: Vec<Estimate> = rows.iter().filter(|r| r.lambda == lambda).map(|r| r.variance).collect();
            (lambda, classify(&v))
        })
        .collect();
    let mut by_lambda: Vec<f64> = lambdas.to_vec();
    by_lambda.sort_by(f64::total_cmp);
    let monotone_in_lambda = ls
        .iter()
        .map(|&l| {
            let v: Vec<Estimate> = by_lambda
                .iter()
                .map(|&lam| rows.iter().find(|r| r.l == l && r.lambda == lam).unwrap().variance)
                .collect();
            (l, v.windows(2).all(|w| w[0].mean >= w[1].mean - 3.0 * w[0].combined_sigma(&w[1])))
        })
        .collect();
    Ok(DepinningTable { rows, trends, monotone_in_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(mean: f64, sigma: f64) -> Estimate {
        Estimate { mean, sigma, batches: 20, samples: 1000 }
    }

    #[test]
    fn trend_classification() {
        assert_eq!(classify(&[e(1.0, 0.1), e(2.0, 0.1), e(3.0, 0.1)]), Trend::Growing);
        assert_eq!(classify(&[e(1.0, 0.1), e(1.1, 0.1), e(0.95, 0.1)]), Trend::Flat);
        assert_eq!(classify(&[e(1.0, 0.01), e(2.0, 0.01), e(2.0, 0.01)]), Trend::Undetermined);
    }
}
