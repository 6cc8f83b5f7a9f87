//! Statistical tests over a batch of trial results.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use super::trial::{BusemannSample, TrialResult};
use crate::error::{Error, Result};
use crate::geometry::Interval;
use crate::gff::FieldGrid;
use crate::gmc::{fit_moment_slope, SlopeFit};
use crate::metric::{mollify, shortest_paths, MetricGraph};
use crate::params::{psi, variation_exponent, LqgParams};
use crate::stats::{
    bootstrap_interval, bootstrap_stderr, coefficient_of_variation, mean, median, pearson, stderr, variance,
    Estimate, BOOTSTRAP_SEED,
};

const RESAMPLES: usize = 1000;

/// `|𝔅(0,1)|^{γ'd_γ/(2γ)}` recovered from a pair at scale `r` through the
/// scaling identity `𝔅(rx, ry) = r^{ξQ} e^{ξh_r(x)} 𝔅(x, y)` in law.
pub fn kappa_sample(s: &BusemannSample, params: &LqgParams) -> f64 {
    let p = variation_exponent(params);
    let gp = params.gamma_prime;
    let scale = (-0.5 * gp * params.q * s.r.ln() - 0.5 * gp * s.circle_average).exp();
    if p == 0.0 {
        return 1.0;
    }
    scale * s.diff.abs().powf(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Pairs dropped because their far-arc geodesics never merged.
    pub excluded: usize,
}

/// κ from Busemann samples; non-coalesced pairs are excluded and counted.
pub fn kappa_from_samples(samples: &[BusemannSample], params: &LqgParams) -> Result<KappaEstimate> {
    let kept: Vec<f64> = samples.iter().filter(|s| s.coalesced).map(|s| kappa_sample(s, params)).collect();
    let excluded = samples.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Numerical(format!("all {} Busemann pairs failed to coalesce", samples.len())));
    }
    let se = bootstrap_stderr(kept.len(), RESAMPLES, BOOTSTRAP_SEED, |idx| idx.iter().map(|&i| kept[i]).sum::<f64>() / idx.len() as f64);
    Ok(KappaEstimate { mean: mean(&kept), stderr: se, samples: kept.len(), excluded })
}

/// κ from the pairs at `x = 0` of each trial. Needs at least 100 trials.
pub fn estimate_kappa(results: &[TrialResult], params: &LqgParams) -> Result<KappaEstimate> {
    let samples: Vec<BusemannSample> = results.iter().filter_map(|t| t.busemann_samples.first().cloned()).collect();
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!("κ needs at least 100 Busemann samples, got {}", samples.len())));
    }
    kappa_from_samples(&samples, params)
}

/// Ratio `μₙ(I)/ν(I)` on one sub-interval, across trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRatio {
    pub lo: f64,
    pub hi: f64,
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioLevel {
    pub n: u32,
    /// Pearson correlation of `μₙ(Iⱼ)` and `ν(Iⱼ)` pooled over trials and intervals.
    pub correlation: f64,
    pub correlation_stderr: f64,
    /// Coefficient of variation of the per-interval median ratios.
    pub cv: f64,
    pub cv_stderr: f64,
    pub trials: usize,
    pub intervals: Vec<IntervalRatio>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub per_n: Vec<RatioLevel>,
    pub correlation_increasing: bool,
    pub cv_decreasing: bool,
}

/// Statistics of one level from `mu[trial][interval]` and `nu[trial][interval]`.
pub fn ratio_level(n: u32, intervals: &[Interval], mu: &[Vec<f64>], nu: &[Vec<f64>]) -> Result<RatioLevel> {
    let m = intervals.len();
    if mu.len() != nu.len() || mu.iter().chain(nu).any(|row| row.len() != m) {
        return Err(Error::param("masses", "mu and nu must be trials × intervals tables of equal shape"));
    }
    if mu.len() < 2 || m < 2 {
        return Err(Error::InsufficientData("need at least two trials and two intervals".into()));
    }
    let corr = |idx: &[usize]| {
        let xs: Vec<f64> = idx.iter().flat_map(|&t| mu[t].iter().copied()).collect();
        let ys: Vec<f64> = idx.iter().flat_map(|&t| nu[t].iter().copied()).collect();
        pearson(&xs, &ys)
    };
    let ratio = |t: usize, j: usize| mu[t][j] / nu[t][j];
    let cv = |idx: &[usize]| {
        let medians: Vec<f64> = (0..m).map(|j| median(&idx.iter().map(|&t| ratio(t, j)).collect::<Vec<_>>())).collect();
        coefficient_of_variation(&medians)
    };
    let all: Vec<usize> = (0..mu.len()).collect();
    let intervals = intervals
        .iter()
        .enumerate()
        .map(|(j, iv)| {
            let rs: Vec<f64> = all.iter().map(|&t| ratio(t, j)).collect();
            IntervalRatio { lo: iv.lo, hi: iv.hi, mean: mean(&rs), stderr: stderr(&rs), median: median(&rs) }
        })
        .collect();
    Ok(RatioLevel {
        n,
        correlation: corr(&all),
        correlation_stderr: bootstrap_stderr(mu.len(), RESAMPLES, BOOTSTRAP_SEED, corr),
        cv: cv(&all),
        cv_stderr: bootstrap_stderr(mu.len(), RESAMPLES, BOOTSTRAP_SEED, cv),
        trials: mu.len(),
        intervals,
    })
}

/// Correlation and dispersion of `μₙ/ν^{γ'}` per level, with their trends in `n`.
pub fn ratio_convergence_test(results: &[TrialResult], config: &TrialConfig) -> Result<RatioReport> {
    if results.len() < 200 {
        return Err(Error::InsufficientData(format!("ratio test needs at least 200 trials, got {}", results.len())));
    }
    if config.levels.len() < 2 {
        return Err(Error::InsufficientData("ratio test needs at least two levels".into()));
    }
    if config.intervals < 8 {
        return Err(Error::InsufficientData("ratio test needs at least eight intervals".into()));
    }
    if results.iter().any(|t| t.levels.len() != config.levels.len() || t.gmc.len() != config.intervals) {
        return Err(Error::InsufficientData("trials carry no variation or GMC masses".into()));
    }
    let subs = config.sub_intervals();
    let nu: Vec<Vec<f64>> = results.iter().map(|t| t.gmc.clone()).collect();
    let per_n = config
        .levels
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let mu: Vec<Vec<f64>> = results.iter().map(|t| t.levels[k].profile.clone()).collect();
            ratio_level(n, &subs, &mu, &nu)
        })
        .collect::<Result<Vec<_>>>()?;
    let correlation_increasing = per_n.windows(2).all(|w| w[1].correlation > w[0].correlation);
    let cv_decreasing = per_n.windows(2).all(|w| w[1].cv < w[0].cv);
    Ok(RatioReport { per_n, correlation_increasing, cv_decreasing })
}

/// Largest `|D_{h+c} − e^{ξc} D_h| / D_h` over `pairs` random vertex pairs.
pub fn weyl_exactness_test(field: &FieldGrid, c: f64, params: &LqgParams, epsilon: f64, pairs: usize, seed: u64) -> Result<f64> {
    let base = MetricGraph::from_smoothed(&mollify(field, epsilon)?, params.xi, epsilon, 1.0, None)?;
    let shifted_field = field.clone().add_constant(c)?;
    let shifted = MetricGraph::from_smoothed(&mollify(&shifted_field, epsilon)?, params.xi, epsilon, 1.0, None)?;
    let n = field.grid.len();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut by_source: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for _ in 0..pairs {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        by_source.entry(u).or_default().push(v);
    }
    let factor = (params.xi * c).exp();
    let mut worst: f64 = 0.0;
    for (u, targets) in by_source {
        let (a, b) = (shortest_paths(&base, &[u])?, shortest_paths(&shifted, &[u])?);
        for v in targets {
            if v != u {
                worst = worst.max((b.dist[v] - factor * a.dist[v]).abs() / a.dist[v]);
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateReport {
    pub r: f64,
    /// `ξQ log r`.
    pub target: f64,
    /// Mean over trials of `log D(r·s) − log D(s)`.
    pub estimate: Estimate,
    pub within_3sigma: bool,
}

/// Compares restricted distances at separations `s` and `r·s` about the same midpoint.
pub fn coordinate_change_test(results: &[TrialResult], r: f64, params: &LqgParams) -> Result<CoordinateReport> {
    let k = r.log2();
    if !(r > 0.0 && (k - k.round()).abs() < 1e-12) {
        return Err(Error::param("r", format!("{r} is not a power of two")));
    }
    let per_trial: Vec<f64> = results
        .iter()
        .filter_map(|t| {
            let diffs: Vec<f64> = t
                .restricted
                .iter()
                .filter_map(|a| {
                    t.restricted
                        .iter()
                        .find(|b| b.mid == a.mid && (b.separation - r * a.separation).abs() <= 1e-12 * b.separation)
                        .map(|b| b.distance.ln() - a.distance.ln())
                })
                .collect();
            (!diffs.is_empty()).then(|| mean(&diffs))
        })
        .collect();
    if per_trial.is_empty() {
        return Err(Error::InsufficientData(format!("no separation pairs in ratio {r}")));
    }
    let estimate = Estimate::of_mean(&per_trial)?;
    let target = params.xi * params.q * r.ln();
    Ok(CoordinateReport { r, target, within_3sigma: (estimate.value - target).abs() <= 3.0 * estimate.stderr, estimate })
}

/// Mean and variance of a sample with percentile bootstrap intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub samples: usize,
    pub mean: f64,
    pub mean_ci: (f64, f64),
    pub variance: f64,
    pub variance_ci: (f64, f64),
}

impl MomentSummary {
    pub fn of(xs: &[f64], coverage: f64) -> Result<Self> {
        if xs.len() < 10 {
            return Err(Error::InsufficientData(format!("need at least 10 samples, got {}", xs.len())));
        }
        let pick = |idx: &[usize]| idx.iter().map(|&i| xs[i]).collect::<Vec<_>>();
        Ok(MomentSummary {
            samples: xs.len(),
            mean: mean(xs),
            mean_ci: bootstrap_interval(xs.len(), RESAMPLES, BOOTSTRAP_SEED, coverage, |idx| mean(&pick(idx))),
            variance: variance(xs),
            variance_ci: bootstrap_interval(xs.len(), RESAMPLES, BOOTSTRAP_SEED, coverage, |idx| variance(&pick(idx))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub x0: f64,
    pub r: f64,
    pub left: MomentSummary,
    pub right: MomentSummary,
    pub overlap: bool,
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Compares rescaled Busemann moments at `x = 0` and `x = x₀` with 95% bootstrap intervals.
pub fn busemann_symmetry_test(results: &[TrialResult], params: &LqgParams) -> Result<SymmetryReport> {
    let side = |k: usize| -> Vec<f64> {
        results
            .iter()
            .filter_map(|t| t.busemann_samples.get(k))
            .filter(|s| s.coalesced)
            .map(|s| kappa_sample(s, params))
            .collect()
    };
    let first = results
        .iter()
        .find_map(|t| t.busemann_samples.get(1).map(|s| (s.x, s.r)))
        .ok_or_else(|| Error::InsufficientData("no shifted Busemann samples".into()))?;
    let left = MomentSummary::of(&side(0), 0.95)?;
    let right = MomentSummary::of(&side(1), 0.95)?;
    let overlap = overlaps(left.mean_ci, right.mean_ci) && overlaps(left.variance_ci, right.variance_ci);
    Ok(SymmetryReport { x0: first.0, r: first.1, left, right, overlap })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NongoodLevel {
    pub n: u32,
    pub mass: Estimate,
    pub good_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NongoodReport {
    pub per_n: Vec<NongoodLevel>,
    /// Nonincreasing in `n` within one-sigma bands.
    pub passed: bool,
}

/// Mean profile-measure mass carried by non-good points, per level.
pub fn nongood_mass_test(results: &[TrialResult]) -> Result<NongoodReport> {
    let first = results.first().ok_or_else(|| Error::InsufficientData("no trials".into()))?;
    if first.levels.is_empty() {
        return Err(Error::InsufficientData("trials carry no variation measures".into()));
    }
    let per_n = (0..first.levels.len())
        .map(|k| {
            let masses: Vec<f64> = results.iter().map(|t| t.levels[k].nongood.iter().sum()).collect();
            let good: Vec<f64> = results.iter().map(|t| t.levels[k].good_fraction).collect();
            Ok(NongoodLevel { n: first.levels[k].n, mass: Estimate::of_mean(&masses)?, good_fraction: mean(&good) })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = per_n.windows(2).all(|w| w[1].mass.value - w[1].mass.stderr <= w[0].mass.value + w[0].mass.stderr);
    Ok(NongoodReport { per_n, passed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub name: String,
    pub target: f64,
    pub fit: SlopeFit,
}

/// Log-log slope of `E[D(x,y; 𝔻)^{γ'd_γ/(2γ)}]` against the separation, target `ψ_γ(γ'/γ)`.
pub fn distance_moment_scaling_test(results: &[TrialResult], params: &LqgParams) -> Result<SlopeReport> {
    if results.len() < 500 {
        return Err(Error::InsufficientData(format!("need at least 500 trials, got {}", results.len())));
    }
    let seps: BTreeSet<u64> = results.iter().flat_map(|t| t.restricted.iter().map(|s| s.separation.to_bits())).collect();
    let mut scales: Vec<f64> = seps.into_iter().map(f64::from_bits).collect();
    scales.sort_by(f64::total_cmp);
    if scales.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 separations, got {}", scales.len())));
    }
    let masses: Vec<Vec<Vec<f64>>> = results
        .iter()
        .map(|t| {
            scales
                .iter()
                .map(|&s| t.restricted.iter().filter(|r| r.separation == s).map(|r| r.distance).collect())
                .collect()
        })
        .collect();
    let fit = fit_moment_slope(&scales, &masses, variation_exponent(params))?;
    Ok(SlopeReport {
        name: "restricted_distance_moment".into(),
        target: psi(params.gamma, params.gamma_prime / params.gamma)?,
        fit,
    })
}
