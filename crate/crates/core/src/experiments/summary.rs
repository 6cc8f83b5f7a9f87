//! Aggregation of a run into a reportable summary.

use serde::{Deserialize, Serialize};

use super::analysis::{
    busemann_symmetry_test, coordinate_change_test, distance_moment_scaling_test, estimate_kappa, nongood_mass_test,
    ratio_convergence_test, CoordinateReport, KappaEstimate, NongoodReport, RatioReport, SymmetryReport,
};
use super::config::{Measurements, TrialConfig};
use super::trial::TrialResult;
use crate::error::{Error, Result};
use crate::stats::mean;

/// Relative tolerance of the per-trial Weyl check.
pub const WEYL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub name: String,
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

/// A test that could not run on this batch, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardChecks {
    pub domination_violations: usize,
    pub identity_checks: usize,
    pub identity_violations: usize,
    pub max_identity_error: f64,
    pub max_weyl_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config_echo: TrialConfig,
    pub seed: u64,
    pub trials: usize,
    pub kappa: Option<KappaEstimate>,
    pub slopes: Vec<SlopeEntry>,
    pub ratio_test: Option<RatioReport>,
    pub nongood: Option<NongoodReport>,
    pub symmetry: Option<SymmetryReport>,
    pub coordinate_change: Option<CoordinateReport>,
    /// Mean fraction of good points per level.
    pub good_fraction: Vec<(u32, f64)>,
    pub hard_checks: HardChecks,
    pub pass: Vec<Check>,
    pub skipped: Vec<Skipped>,
}

fn attempt<T>(name: &str, skipped: &mut Vec<Skipped>, r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::InsufficientData(_) | Error::Numerical(_))) => {
            skipped.push(Skipped { name: name.into(), reason: e.to_string() });
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs every applicable test; tests whose preconditions fail are listed as skipped.
pub fn summarize(config: &TrialConfig, results: &[TrialResult]) -> Result<ExperimentSummary> {
    if results.is_empty() {
        return Err(Error::InsufficientData("a summary needs at least one trial".into()));
    }
    let params = &config.params;
    let mut skipped = Vec::new();
    let kappa = attempt("kappa", &mut skipped, estimate_kappa(results, params))?;
    let ratio_test = attempt("ratio_convergence", &mut skipped, ratio_convergence_test(results, config))?;
    let nongood = attempt("nongood_mass", &mut skipped, nongood_mass_test(results))?;
    let symmetry = attempt("busemann_symmetry", &mut skipped, busemann_symmetry_test(results, params))?;
    let coordinate_change = attempt("coordinate_change", &mut skipped, coordinate_change_test(results, 2.0, params))?;
    let moment = attempt("distance_moment_scaling", &mut skipped, distance_moment_scaling_test(results, params))?;

    let mut slopes = Vec::new();
    if let Some(m) = &moment {
        slopes.push(SlopeEntry { name: m.name.clone(), target: m.target, estimate: m.fit.slope, stderr: m.fit.stderr });
    }
    if let Some(c) = &coordinate_change {
        slopes.push(SlopeEntry {
            name: "coordinate_change_log2".into(),
            target: c.target,
            estimate: c.estimate.value,
            stderr: c.estimate.stderr,
        });
    }

    let hard_checks = HardChecks {
        domination_violations: results.iter().map(|t| t.domination_violations).sum(),
        identity_checks: results.iter().map(|t| t.identity_checks).sum(),
        identity_violations: results.iter().map(|t| t.identity_violations).sum(),
        max_identity_error: results.iter().map(|t| t.max_identity_error).fold(0.0, f64::max),
        max_weyl_residual: results.iter().map(|t| t.weyl_residual).fold(0.0, f64::max),
    };
    let good_fraction = (0..results[0].levels.len())
        .map(|k| (results[0].levels[k].n, mean(&results.iter().map(|t| t.levels[k].good_fraction).collect::<Vec<_>>())))
        .collect();

    let mut pass = vec![Check { name: "weyl_exactness".into(), passed: hard_checks.max_weyl_residual <= WEYL_TOLERANCE }];
    if config.measurements == Measurements::Full {
        pass.push(Check { name: "domination".into(), passed: hard_checks.domination_violations == 0 });
        pass.push(Check { name: "good_point_identities".into(), passed: hard_checks.identity_violations == 0 });
    }
    if let Some(r) = &ratio_test {
        let first = r.per_n.first().map_or(f64::NAN, |l| l.correlation);
        pass.push(Check { name: "ratio_correlation_floor".into(), passed: first >= 0.5 });
        pass.push(Check { name: "ratio_correlation_increasing".into(), passed: r.correlation_increasing });
        pass.push(Check { name: "ratio_cv_decreasing".into(), passed: r.cv_decreasing });
    }
    if let Some(n) = &nongood {
        pass.push(Check { name: "nongood_mass_nonincreasing".into(), passed: n.passed });
    }
    if let Some(s) = &symmetry {
        pass.push(Check { name: "busemann_symmetry".into(), passed: s.overlap });
    }
    if let Some(c) = &coordinate_change {
        pass.push(Check { name: "coordinate_change".into(), passed: c.within_3sigma });
    }
    if let Some(m) = &moment {
        pass.push(Check { name: "distance_moment_slope".into(), passed: (m.fit.slope - m.target).abs() <= 0.1 });
    }

    Ok(ExperimentSummary {
        config_echo: config.clone(),
        seed: config.master_seed,
        trials: results.len(),
        kappa,
        slopes,
        ratio_test,
        nongood,
        symmetry,
        coordinate_change,
        good_fraction,
        hard_checks,
        pass,
        skipped,
    })
}
