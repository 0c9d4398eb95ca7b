use serde::{Deserialize, Serialize};

/// Batch means never uses fewer batches than this.
pub const MIN_BATCHES: usize = 20;

/// A Monte Carlo mean with its batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of `mean`.
    pub sigma: f64,
    pub batches: usize,
    pub samples: usize,
}

impl Estimate {
    /// An exactly known value, for mixing exact and sampled quantities.
    pub fn exact(x: f64) -> Self {
        Estimate { mean: x, sigma: 0.0, batches: 0, samples: 0 }
    }

    /// Whether `|mean - target| ≤ k σ`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.sigma
    }

    /// `σ` of the difference of two independent estimates.
    pub fn combined_sigma(&self, other: &Estimate) -> f64 {
        self.sigma.hypot(other.sigma)
    }
}

/// Splits `series` into `batches` consecutive blocks of equal length
/// (dropping the remainder at the front) and returns the block means.
fn block_means(series: &[f64], batches: usize) -> Vec<f64> {
    let len = series.len() / batches;
    if len == 0 {
        return Vec::new();
    }
    let skip = series.len() - len * batches;
    series[skip..].chunks(len).map(|c| c.iter().sum::<f64>() / len as f64).collect()
}

/// Mean and standard error of a correlated series by batch means over
/// `MIN_BATCHES` blocks.
pub fn batch_means(series: &[f64]) -> Estimate {
    pool(&[block_means(series, MIN_BATCHES)], series.len())
}

/// Pools per-chain block means, in chain order, into one estimate. The
/// result is independent of how the chains were scheduled.
pub fn pool(blocks: &[Vec<f64>], samples: usize) -> Estimate {
    let all: Vec<f64> = blocks.iter().flatten().copied().collect();
    let b = all.len();
    if b == 0 {
        return Estimate { mean: f64::NAN, sigma: f64::NAN, batches: 0, samples };
    }
    let mean = all.iter().sum::<f64>() / b as f64;
    let var = if b > 1 { all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64 } else { f64::NAN };
    Estimate { mean, sigma: (var / b as f64).sqrt(), batches: b, samples }
}

pub(crate) fn chain_blocks(series: &[f64]) -> Vec<f64> {
    block_means(series, MIN_BATCHES)
}
