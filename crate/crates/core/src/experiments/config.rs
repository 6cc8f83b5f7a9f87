//! Experiment configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Interval, Point};
use crate::gff::SamplerKind;
use crate::params::{check_alpha, CoalescenceConfig, LqgParams};
use crate::profile::{check_dyadic_alignment, dyadic_step};

/// Which measurements a trial performs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurements {
    /// Profiles, variation measures, coalescence, GMC, Busemann pairs and restricted distances.
    #[default]
    Full,
    /// Only restricted distances and the Weyl check; reference points, levels and
    /// the far arc are ignored.
    RestrictedDistances,
}

/// Everything a trial needs. Built once, shared read-only by all trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub params: LqgParams,
    pub coalescence: CoalescenceConfig,
    pub grid: GridSpec,
    pub sampler: SamplerKind,
    /// Mollification scale of the metric and regularization scale of the GMC.
    pub epsilon: f64,
    pub a_eps: f64,
    pub levels: Vec<u32>,
    pub window: Interval,
    pub intervals: usize,
    /// Reference point `z` of the distance profile.
    pub reference: Point,
    /// Further reference points used to certify good points.
    pub alt_references: Vec<Point>,
    /// Radius of the far semicircle about 0 standing in for infinity.
    pub far_arc_radius: f64,
    /// Scale `r` of the Busemann pairs `(x, x + r)`.
    pub kappa_scale: f64,
    /// Translation `x₀` used by the Busemann symmetry test.
    pub symmetry_shift: f64,
    pub separations: Vec<f64>,
    /// Midpoints of the restricted-distance pairs.
    pub separation_mids: Vec<f64>,
    /// Constant added to the field by the per-trial Weyl check.
    pub weyl_shift: f64,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub measurements: Measurements,
}

impl TrialConfig {
    /// The default study: `γ = γ' = √(8/3)` on a 1024×512 lattice of spacing 1/256.
    pub fn standard() -> Self {
        let spacing = 1.0 / 256.0;
        TrialConfig {
            params: LqgParams::brownian(),
            coalescence: CoalescenceConfig::default(),
            grid: GridSpec::centered(1024, 512, spacing).expect("valid grid"),
            sampler: SamplerKind::Spectral,
            epsilon: 2.0 * spacing,
            a_eps: 1.0,
            levels: vec![3, 4, 5],
            window: Interval { lo: -0.5, hi: 0.5 },
            intervals: 8,
            reference: Point::new(0.0, 0.75),
            alt_references: vec![Point::new(-0.6, 0.75), Point::new(0.6, 0.75)],
            far_arc_radius: 127.0 / 128.0,
            kappa_scale: 0.125,
            symmetry_shift: 0.25,
            separations: vec![0.5, 0.25, 0.125, 0.0625],
            separation_mids: vec![-0.5, 0.0, 0.5],
            weyl_shift: 1.0,
            master_seed: 1,
            trials: 200,
            measurements: Measurements::Full,
        }
    }

    pub fn sub_intervals(&self) -> Vec<Interval> {
        self.window.split(self.intervals)
    }

    /// Checks every structural constraint before any computation.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !check_alpha(&self.coalescence, &self.params)? {
            return Err(Error::param(
                "alpha2",
                format!(
                    "alpha2 = {} violates (1-a2)*variation_exponent - a2*psi > 0",
                    self.coalescence.alpha2
                ),
            ));
        }
        if !(self.epsilon >= 2.0 * g.spacing * (1.0 - 1e-12)) {
            return Err(Error::Resolution(format!("epsilon {} must be at least two lattice spacings", self.epsilon)));
        }
        if !(self.a_eps > 0.0 && self.a_eps.is_finite()) {
            return Err(Error::param("a_eps", "must be positive"));
        }
        if self.measurements == Measurements::Full {
            self.validate_full()?;
        }
        for &s in &self.separations {
            for &c in &self.separation_mids {
                g.boundary_vertex(c - 0.5 * s)?;
                g.boundary_vertex(c + 0.5 * s)?;
                if !g.covers_disk(Point::boundary(c), s) || 2.0 * s / g.spacing < 8.0 {
                    return Err(Error::Domain(format!("restricted pair of separation {s} about {c} does not fit")));
                }
            }
        }
        if self.trials == 0 {
            return Err(Error::param("trials", "must be positive"));
        }
        Ok(())
    }

    /// Checks needed only by the profile, coalescence and GMC measurements.
    fn validate_full(&self) -> Result<()> {
        let g = &self.grid;
        if self.levels.is_empty() {
            return Err(Error::param("levels", "at least one dyadic level is required"));
        }
        for &n in &self.levels {
            let cells = check_dyadic_alignment(n, g.spacing)?;
            if cells < 8 {
                return Err(Error::Resolution(format!("level {n} has {cells} lattice cells per dyadic step, fewer than 8")));
            }
        }
        if self.intervals == 0 {
            return Err(Error::param("intervals", "must be positive"));
        }
        let coarsest = *self.levels.iter().min().expect("nonempty");
        for iv in self.sub_intervals() {
            for x in [iv.lo, iv.hi] {
                let k = x / dyadic_step(coarsest);
                if (k - k.round()).abs() > 1e-9 {
                    return Err(Error::param("window", format!("interval endpoint {x} is not on the level-{coarsest} grid")));
                }
            }
        }
        let margin = |name: &str, p: Point| -> Result<()> {
            if !g.respects_margin(p, 0.0) || !g.contains(p) {
                return Err(Error::Domain(format!(
                    "{name} ({}, {}) is closer than a quarter box width to the box edge",
                    p.x, p.y
                )));
            }
            Ok(())
        };
        margin("reference", self.reference)?;
        for &p in &self.alt_references {
            margin("alt_reference", p)?;
        }
        margin("window start", Point::boundary(self.window.lo))?;
        margin("window end", Point::boundary(self.window.hi))?;
        for p in [
            Point::new(0.0, self.far_arc_radius),
            Point::boundary(-self.far_arc_radius),
            Point::boundary(self.far_arc_radius),
        ] {
            margin("far arc", p)?;
        }
        if self.far_arc_radius <= self.window.lo.abs().max(self.window.hi.abs()) {
            return Err(Error::param("far_arc_radius", "the far arc must enclose the window"));
        }
        if self.reference.y <= 0.0 {
            return Err(Error::param("reference", "must be a bulk point"));
        }
        for x in [0.0, self.symmetry_shift] {
            g.boundary_vertex(x)?;
            g.boundary_vertex(x + self.kappa_scale)?;
            if !g.covers_disk(Point::boundary(x), self.kappa_scale.max(2.0 * g.spacing)) {
                return Err(Error::Domain(format!("Busemann pair at {x} does not fit the grid")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_config_is_valid() {
        TrialConfig::standard().validate().unwrap();
    }

    #[test]
    fn level_resolution_rule() {
        let mut c = TrialConfig::standard();
        c.levels = vec![3, 6];
        assert!(matches!(c.validate(), Err(Error::Resolution(_))));
    }

    #[test]
    fn restricted_mode_ignores_reference_geometry() {
        let mut c = TrialConfig::standard();
        c.reference = Point::new(0.0, 1.9);
        c.measurements = Measurements::RestrictedDistances;
        c.validate().unwrap();
        c.separations = vec![1.0 / 512.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn margin_rule_is_enforced() {
        let mut c = TrialConfig::standard();
        c.reference = Point::new(0.0, 1.5);
        assert!(matches!(c.validate(), Err(Error::Domain(_))));
        let mut c = TrialConfig::standard();
        c.coalescence.alpha2 = 0.9;
        assert!(c.validate().is_err());
    }
}
