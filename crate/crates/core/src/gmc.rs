//! Regularized boundary GMC measures and their moment scaling.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Interval, Point};
use crate::gff::{FieldGrid, KernelQuadrature};
use crate::stats::{bootstrap_stderr, ols, BOOTSTRAP_SEED};

/// Atomic measure `ε^{γ'²/4} e^{γ' h_ε(x)/2} δ` on the boundary nodes of `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub interval: Interval,
    pub epsilon: f64,
    pub spacing: f64,
    pub xs: Vec<f64>,
    pub atoms: Vec<f64>,
}

fn tolerance(spacing: f64) -> f64 {
    1e-9 * spacing
}

/// Abscissae `lo + kδ` in `[lo, hi)`.
fn lattice_points(interval: Interval, spacing: f64) -> Vec<f64> {
    let count = ((interval.len() / spacing) - 1e-9).ceil().max(0.0) as usize;
    (0..count).map(|k| interval.lo + k as f64 * spacing).collect()
}

impl BoundaryMeasure {
    /// Builds atoms from given semicircle averages `h_ε(x)` at the atom locations.
    pub fn from_circle_averages(
        interval: Interval,
        xs: Vec<f64>,
        averages: &[f64],
        gamma_prime: f64,
        epsilon: f64,
        spacing: f64,
    ) -> Result<Self> {
        if xs.len() != averages.len() {
            return Err(Error::param("averages", "one average is needed per atom"));
        }
        let scale = epsilon.powf(gamma_prime * gamma_prime / 4.0) * spacing;
        let atoms: Vec<f64> = averages.iter().map(|&h| scale * (0.5 * gamma_prime * h).exp()).collect();
        if let Some(k) = atoms.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Numerical(format!("atom {k} is not a positive finite mass")));
        }
        Ok(BoundaryMeasure { interval, epsilon, spacing, xs, atoms })
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().sum()
    }
}

/// The regularized measure on the lattice boundary nodes of `interval`.
pub fn boundary_gmc(field: &FieldGrid, gamma_prime: f64, epsilon: f64, interval: Interval) -> Result<BoundaryMeasure> {
    let g = &field.grid;
    if !(gamma_prime > 0.0 && gamma_prime < 2.0) {
        return Err(Error::param("gamma_prime", format!("{gamma_prime} is outside (0, 2)")));
    }
    if epsilon < 2.0 * g.spacing * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!("epsilon {epsilon} is below two lattice spacings")));
    }
    if !g.covers_disk(Point::boundary(interval.lo), epsilon) || !g.covers_disk(Point::boundary(interval.hi), epsilon) {
        return Err(Error::Domain(format!("interval [{}, {}] does not fit in the grid", interval.lo, interval.hi)));
    }
    g.boundary_vertex(interval.lo)?;
    let xs = lattice_points(interval, g.spacing);
    let averages = xs
        .iter()
        .map(|&x| field.circle_average(Point::boundary(x), epsilon))
        .collect::<Result<Vec<_>>>()?;
    BoundaryMeasure::from_circle_averages(interval, xs, &averages, gamma_prime, epsilon, g.spacing)
}

/// Mass of the atoms in `[sub.lo, sub.hi)`.
pub fn measure_mass(measure: &BoundaryMeasure, sub: Interval) -> Result<f64> {
    let tol = tolerance(measure.spacing);
    if !measure.interval.contains_interval(&sub, tol) {
        return Err(Error::Domain(format!(
            "[{}, {}] is not inside [{}, {}]",
            sub.lo, sub.hi, measure.interval.lo, measure.interval.hi
        )));
    }
    Ok(measure
        .xs
        .iter()
        .zip(&measure.atoms)
        .filter(|(x, _)| **x >= sub.lo - tol && **x < sub.hi - tol)
        .map(|(_, a)| a)
        .sum())
}

/// `exp(γ'² V(x)/8)`, the mean of `e^{γ' h₁(x)/2}`.
pub fn unit_moment_density(quad: &KernelQuadrature, x: f64, gamma_prime: f64) -> f64 {
    (gamma_prime * gamma_prime * quad.unit_variance(x) / 8.0).exp()
}

/// Riemann sum of [`unit_moment_density`] over the atoms of `[lo, hi)` at `spacing`.
pub fn expected_mass(interval: Interval, spacing: f64, gamma_prime: f64) -> f64 {
    let quad = KernelQuadrature::default();
    lattice_points(interval, spacing)
        .iter()
        .map(|&x| unit_moment_density(&quad, x, gamma_prime) * spacing)
        .sum()
}

/// A fitted scaling exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub samples: usize,
    /// `(log scale, log moment)` per scale.
    pub points: Vec<(f64, f64)>,
}

/// Log-log regression of `E[m^p]` against scale with a bootstrap over fields.
///
/// `masses[f][s]` holds the masses of field `f` on the sub-intervals of scale
/// `scales[s]`; within a field the sub-intervals are averaged.
pub fn fit_moment_slope(scales: &[f64], masses: &[Vec<Vec<f64>>], p: f64) -> Result<SlopeFit> {
    if scales.len() < 2 {
        return Err(Error::InsufficientData(format!("{} scales are too few for a slope", scales.len())));
    }
    if masses.len() < 2 {
        return Err(Error::InsufficientData("at least two fields are needed".into()));
    }
    if masses.iter().any(|f| f.len() != scales.len() || f.iter().any(|s| s.is_empty())) {
        return Err(Error::param("masses", "every field needs masses at every scale"));
    }
    let per_field: Vec<Vec<f64>> = masses
        .iter()
        .map(|f| f.iter().map(|s| s.iter().map(|m| m.powf(p)).sum::<f64>() / s.len() as f64).collect())
        .collect();
    let logx: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let fit = |idx: &[usize]| {
        let logy: Vec<f64> = (0..scales.len())
            .map(|s| (idx.iter().map(|&f| per_field[f][s]).sum::<f64>() / idx.len() as f64).ln())
            .collect();
        ols(&logx, &logy)
    };
    let all: Vec<usize> = (0..masses.len()).collect();
    let (slope, intercept) = fit(&all);
    let stderr = bootstrap_stderr(masses.len(), 1000, BOOTSTRAP_SEED, |idx| fit(idx).0);
    let points = (0..scales.len())
        .map(|s| (logx[s], (per_field.iter().map(|f| f[s]).sum::<f64>() / masses.len() as f64).ln()))
        .collect();
    Ok(SlopeFit { slope, intercept, stderr, samples: masses.len(), points })
}

/// [`fit_moment_slope`] with the preconditions of a GMC moment study:
/// `p ∈ (0, 4/γ'²)`, at least four scales and 500 fields.
pub fn moment_scaling(scales: &[f64], masses: &[Vec<Vec<f64>>], p: f64, gamma_prime: f64) -> Result<SlopeFit> {
    let upper = 4.0 / (gamma_prime * gamma_prime);
    if !(p > 0.0 && p < upper) {
        return Err(Error::param("p", format!("{p} is outside the finite-moment range (0, {upper})")));
    }
    if scales.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 scales, got {}", scales.len())));
    }
    if masses.len() < 500 {
        return Err(Error::InsufficientData(format!("need at least 500 fields, got {}", masses.len())));
    }
    fit_moment_slope(scales, masses, p)
}

/// One row of the GMC table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmcRow {
    pub trial: u64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub epsilon: f64,
    pub mass: f64,
}

pub fn write_gmc_csv(w: impl Write, rows: &[GmcRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}
