//! Small descriptive statistics and bootstrap helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed for every bootstrap in the crate, so reports are reproducible.
pub const BOOTSTRAP_SEED: u64 = 0x5EED_B007;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pearson correlation; NaN when either sample is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Coefficient of variation (sample standard deviation over |mean|).
pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    variance(xs).sqrt() / mean(xs).abs()
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// A point estimate with its standard error and sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn of_mean(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        Ok(Estimate { value: mean(xs), stderr: stderr(xs), samples: xs.len() })
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Bootstrap standard deviation of `stat` over resamples of `n` units.
pub fn bootstrap_stderr(n: usize, resamples: usize, seed: u64, mut stat: impl FnMut(&[usize]) -> f64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let values: Vec<f64> = (0..resamples)
        .map(|_| {
            for k in idx.iter_mut() {
                *k = rng.random_range(0..n);
            }
            stat(&idx)
        })
        .filter(|v| v.is_finite())
        .collect();
    variance(&values).sqrt()
}

/// Percentile bootstrap interval of `stat` at the given coverage.
pub fn bootstrap_interval(
    n: usize,
    resamples: usize,
    seed: u64,
    coverage: f64,
    mut stat: impl FnMut(&[usize]) -> f64,
) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut values: Vec<f64> = (0..resamples)
        .map(|_| {
            for k in idx.iter_mut() {
                *k = rng.random_range(0..n);
            }
            stat(&idx)
        })
        .filter(|v| v.is_finite())
        .collect();
    values.sort_by(f64::total_cmp);
    let q = |p: f64| values[((p * (values.len() - 1) as f64).round() as usize).min(values.len() - 1)];
    let tail = 0.5 * (1.0 - coverage);
    (q(tail), q(1.0 - tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!((pearson(&xs, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
        assert!(pearson(&xs, &[1.0; 4]).is_nan());
        let (s, c) = ols(&xs, &[1.0, 3.0, 5.0, 7.0]);
        assert!((s - 2.0).abs() < 1e-15 && (c + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_matches_analytic_stderr() {
        let xs: Vec<f64> = (0..400).map(|k| ((k * 37) % 101) as f64).collect();
        let se = bootstrap_stderr(xs.len(), 2000, 1, |idx| idx.iter().map(|&k| xs[k]).sum::<f64>() / idx.len() as f64);
        assert!((se / stderr(&xs) - 1.0).abs() < 0.1);
        let (lo, hi) = bootstrap_interval(xs.len(), 2000, 1, 0.95, |idx| idx.iter().map(|&k| xs[k]).sum::<f64>() / idx.len() as f64);
        assert!(lo < mean(&xs) && mean(&xs) < hi);
    }
}
