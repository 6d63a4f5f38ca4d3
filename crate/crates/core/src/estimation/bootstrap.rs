use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EstimationError;
use crate::rng::rng;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
}

impl BootstrapCI {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &BootstrapCI) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    match sorted.get(i + 1) {
        Some(next) if frac > 0.0 => sorted[i] + frac * (next - sorted[i]),
        _ => sorted[i],
    }
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(
    samples: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapCI, EstimationError> {
    if samples.is_empty() {
        return Err(EstimationError::Empty("bootstrap samples"));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(EstimationError::Invalid(format!(
            "level {level} / resamples {resamples}"
        )));
    }
    let n = samples.len();
    let point = samples.iter().sum::<f64>() / n as f64;
    let mut rng = rng(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    // the percentile interval can miss the point estimate on tiny or very
    // skewed samples; widen it to keep lo <= point <= hi
    let lo = quantile(&means, tail).min(point);
    let hi = quantile(&means, 1.0 - tail).max(point);
    Ok(BootstrapCI {
        point,
        lo,
        hi,
        level,
        resamples,
    })
}
