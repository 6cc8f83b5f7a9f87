//! One Monte-Carlo trial: sample, smooth, build the metric, measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::{Measurements, TrialConfig};
use crate::error::{Error, Result};
use crate::geodesics::{classify_good, coalescence_point, coalescence_record, CoalescenceRecord};
use crate::geometry::{GridSpec, Interval, Point};
use crate::gff::{sampler, FieldGrid, FieldSource};
use crate::gmc::boundary_gmc;
use crate::metric::{mollify, shortest_paths, GeodesicTree, MetricGraph};
use crate::profile::{
    busemann_variation_measure, distance_profile, AtomRow, Flavor, dyadic_step, local_proxy_measure, restricted_distance,
    variation_measure, DistanceProfile,
};
use crate::seeds::trial_seed;

/// Absolute tolerance of the per-sample good-point identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// One dyadic point of one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub u: f64,
    pub profile: f64,
    pub proxy: f64,
    pub busemann: f64,
    pub busemann_diff: f64,
    pub coalesced: bool,
    /// Distance from the coalescence point to the pair midpoint, if the pair coalesced.
    pub radius: Option<f64>,
    pub good: bool,
}

/// Per-level masses on each sub-interval, in interval order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub n: u32,
    pub profile: Vec<f64>,
    pub proxy: Vec<f64>,
    pub busemann: Vec<f64>,
    /// Profile mass carried by non-good points.
    pub nongood: Vec<f64>,
    pub good_fraction: f64,
    pub atoms: Vec<AtomRecord>,
}

/// A Busemann pair `(x, x + r)` with the circle average `h_r(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusemannSample {
    pub x: f64,
    pub r: f64,
    pub diff: f64,
    pub circle_average: f64,
    pub coalesced: bool,
}

/// `D(c − s/2, c + s/2; 𝔻_s(c))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedSample {
    pub mid: f64,
    pub separation: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: u64,
    pub seed: u64,
    pub levels: Vec<LevelResult>,
    /// `ν^{γ'}` of each sub-interval.
    pub gmc: Vec<f64>,
    pub busemann_samples: Vec<BusemannSample>,
    pub restricted: Vec<RestrictedSample>,
    pub weyl_residual: f64,
    /// Atoms where the profile measure exceeds the local proxy.
    pub domination_violations: usize,
    /// Good points whose increment was compared across reference points.
    pub identity_checks: usize,
    /// Good points where the increment depends on the reference point.
    pub identity_violations: usize,
    pub max_identity_error: f64,
}

impl TrialResult {
    /// Atom table rows of all three flavors.
    pub fn atom_rows(&self) -> Vec<AtomRow> {
        let mut rows = Vec::new();
        for level in &self.levels {
            for (flavor, pick) in [
                (Flavor::Profile, (|a: &AtomRecord| a.profile) as fn(&AtomRecord) -> f64),
                (Flavor::LocalProxy, |a| a.proxy),
                (Flavor::Busemann, |a| a.busemann),
            ] {
                rows.extend(level.atoms.iter().map(|a| AtomRow {
                    trial: self.index,
                    n: level.n,
                    u: a.u,
                    atom_mass: pick(a),
                    flavor,
                    good_flag: a.good,
                }));
            }
        }
        rows
    }
}

/// Hard per-sample checks of one level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelChecks {
    pub domination_violations: usize,
    pub identity_checks: usize,
    pub identity_violations: usize,
    pub max_identity_error: f64,
}

/// Trees and graph of one field, shared by all measurements.
pub struct FieldAnalysis {
    pub field: FieldGrid,
    pub graph: MetricGraph,
    pub reference_tree: GeodesicTree,
    pub alt_trees: Vec<GeodesicTree>,
    pub far_tree: GeodesicTree,
}

/// Lattice nodes closest to the semicircle of radius `r` about 0.
pub fn far_arc_vertices(grid: &GridSpec, r: f64) -> Result<Vec<usize>> {
    let m = ((4.0 * PI * r / grid.spacing).ceil() as usize).max(16);
    let mut vs = (0..=m)
        .map(|k| {
            let t = PI * k as f64 / m as f64;
            grid.nearest_vertex(Point::new(r * t.cos(), r * t.sin()))
        })
        .collect::<Result<Vec<_>>>()?;
    vs.sort_unstable();
    vs.dedup();
    Ok(vs)
}

/// The normalized field and its metric graph.
fn prepare(config: &TrialConfig, field: FieldGrid) -> Result<(FieldGrid, MetricGraph)> {
    if field.grid != config.grid {
        return Err(Error::param("field", "field lattice does not match the configured grid"));
    }
    let field = if field.is_normalized() { field } else { field.normalize()? };
    let smooth = mollify(&field, config.epsilon)?;
    let graph = MetricGraph::from_smoothed(&smooth, config.params.xi, config.epsilon, config.a_eps, None)?;
    Ok((field, graph))
}

fn restricted_samples(config: &TrialConfig, graph: &MetricGraph) -> Result<Vec<RestrictedSample>> {
    let mut out = Vec::new();
    for &s in &config.separations {
        for &c in &config.separation_mids {
            out.push(RestrictedSample {
                mid: c,
                separation: s,
                distance: restricted_distance(graph, c - 0.5 * s, c + 0.5 * s)?,
            });
        }
    }
    Ok(out)
}

/// Largest `|D_{h+c} − e^{ξc} D_h| / D_h` from the boundary origin inside the
/// half-disk of radius ¼, with `h + c` run through the whole pipeline.
fn weyl_residual_of(config: &TrialConfig, field: &FieldGrid, graph: &MetricGraph) -> Result<f64> {
    let c = config.weyl_shift;
    let shifted = field.clone().add_constant(c)?;
    let smooth = mollify(&shifted, config.epsilon)?;
    let other = MetricGraph::from_smoothed(&smooth, config.params.xi, config.epsilon, config.a_eps, None)?;
    weyl_residual_between(graph, &other, c, config.params.xi, Point::boundary(0.0), 0.25)
}

impl FieldAnalysis {
    pub fn new(config: &TrialConfig, field: FieldGrid) -> Result<Self> {
        let (field, graph) = prepare(config, field)?;
        let g = &config.grid;
        let reference_tree = shortest_paths(&graph, &[g.nearest_vertex(config.reference)?])?;
        let alt_trees = config
            .alt_references
            .iter()
            .map(|&p| shortest_paths(&graph, &[g.nearest_vertex(p)?]))
            .collect::<Result<Vec<_>>>()?;
        let far_tree = shortest_paths(&graph, &far_arc_vertices(g, config.far_arc_radius)?)?;
        Ok(FieldAnalysis { field, graph, reference_tree, alt_trees, far_tree })
    }

    pub fn profile(&self, config: &TrialConfig) -> Result<DistanceProfile> {
        distance_profile(&self.reference_tree, &self.graph, config.window)
    }

    /// Coalescence records of one level, classified.
    pub fn records(&self, config: &TrialConfig, n: u32) -> Result<Vec<CoalescenceRecord>> {
        let step = dyadic_step(n);
        let mut refs: Vec<&GeodesicTree> = vec![&self.reference_tree];
        refs.extend(self.alt_trees.iter());
        let mut recs = crate::profile::dyadic_points(n, config.window)
            .into_iter()
            .map(|u| coalescence_record(&config.grid, &self.far_tree, &refs, n, u, u + step))
            .collect::<Result<Vec<_>>>()?;
        classify_good(&mut recs, &config.coalescence);
        Ok(recs)
    }

    pub fn level(&self, config: &TrialConfig, profile: &DistanceProfile, n: u32) -> Result<(LevelResult, LevelChecks)> {
        let params = &config.params;
        let mu = variation_measure(profile, n, params, config.window)?;
        let proxy = local_proxy_measure(&self.graph, n, params, config.window)?;
        let recs = self.records(config, n)?;
        let bus = busemann_variation_measure(&recs, n, params, config.window);
        let g = &config.grid;
        let step = dyadic_step(n);

        let mut atoms = Vec::with_capacity(recs.len());
        let mut checks = LevelChecks::default();
        for (k, r) in recs.iter().enumerate() {
            let p = mu.atom_at(r.u).unwrap_or(0.0);
            let q = proxy.atoms[k];
            if p > q * (1.0 + 1e-12) + 1e-15 {
                checks.domination_violations += 1;
            }
            if r.good {
                let (a, b) = (g.boundary_vertex(r.u)?, g.boundary_vertex(r.u + step)?);
                let mut diffs = vec![self.reference_tree.dist[a] - self.reference_tree.dist[b]];
                diffs.extend(self.alt_trees.iter().map(|t| t.dist[a] - t.dist[b]));
                // Every reference point must see the far-arc increment, and hence each other's.
                let err = diffs
                    .iter()
                    .map(|d| (d - r.busemann).abs().max((d - diffs[0]).abs()))
                    .fold(0.0, f64::max);
                checks.identity_checks += 1;
                checks.max_identity_error = checks.max_identity_error.max(err);
                if err > IDENTITY_TOLERANCE {
                    checks.identity_violations += 1;
                }
            }
            atoms.push(AtomRecord {
                u: r.u,
                profile: p,
                proxy: q,
                busemann: bus.atoms[k],
                busemann_diff: r.busemann,
                coalesced: r.coalesced(),
                radius: r.coalesced().then_some(r.coalescence_radius),
                good: r.good,
            });
        }
        let subs = config.sub_intervals();
        let nongood_of = |iv: &Interval| -> f64 {
            atoms
                .iter()
                .filter(|a| !a.good && a.u >= iv.lo - 1e-9 * step && a.u < iv.hi - 1e-9 * step)
                .map(|a| a.profile)
                .sum()
        };
        let good = atoms.iter().filter(|a| a.good).count();
        let level = LevelResult {
            n,
            profile: subs.iter().map(|iv| mu.mass(*iv)).collect(),
            proxy: subs.iter().map(|iv| proxy.mass(*iv)).collect(),
            busemann: subs.iter().map(|iv| bus.mass(*iv)).collect(),
            nongood: subs.iter().map(nongood_of).collect(),
            good_fraction: if atoms.is_empty() { 0.0 } else { good as f64 / atoms.len() as f64 },
            atoms,
        };
        Ok((level, checks))
    }

    pub fn gmc_masses(&self, config: &TrialConfig) -> Result<Vec<f64>> {
        let m = boundary_gmc(&self.field, config.params.gamma_prime, config.epsilon, config.window)?;
        config.sub_intervals().iter().map(|iv| crate::gmc::measure_mass(&m, *iv)).collect()
    }

    pub fn busemann_samples(&self, config: &TrialConfig) -> Result<Vec<BusemannSample>> {
        let g = &config.grid;
        let r = config.kappa_scale;
        [0.0, config.symmetry_shift]
            .iter()
            .map(|&x| {
                let (a, b) = (g.boundary_vertex(x)?, g.boundary_vertex(x + r)?);
                Ok(BusemannSample {
                    x,
                    r,
                    diff: self.far_tree.dist[a] - self.far_tree.dist[b],
                    circle_average: self.field.circle_average(Point::boundary(x), r)?,
                    coalesced: coalescence_point(&self.far_tree, a, b).is_some(),
                })
            })
            .collect()
    }

    pub fn restricted(&self, config: &TrialConfig) -> Result<Vec<RestrictedSample>> {
        restricted_samples(config, &self.graph)
    }

    pub fn weyl_residual(&self, config: &TrialConfig) -> Result<f64> {
        weyl_residual_of(config, &self.field, &self.graph)
    }
}

/// Compares distances from the node at `center` inside `𝔻_r(center)` on two graphs.
pub fn weyl_residual_between(base: &MetricGraph, shifted: &MetricGraph, c: f64, xi: f64, center: Point, r: f64) -> Result<f64> {
    let (wa, c0) = base.half_disk(center, r)?;
    let (wb, _) = shifted.half_disk(center, r)?;
    let s = base.to_window_vertex(&wa, c0, base.grid.nearest_vertex(center)?).expect("center is in its disk");
    let da = shortest_paths(&wa, &[s])?;
    let db = shortest_paths(&wb, &[s])?;
    let factor = (xi * c).exp();
    Ok(da
        .dist
        .iter()
        .zip(&db.dist)
        .filter(|(a, _)| a.is_finite() && **a > 0.0)
        .map(|(a, b)| (b - factor * a).abs() / a)
        .fold(0.0, f64::max))
}

/// Runs every measurement of one trial on a given field.
pub fn analyze_field(config: &TrialConfig, field: FieldGrid, index: u64) -> Result<TrialResult> {
    let seed = field.seed;
    if config.measurements == Measurements::RestrictedDistances {
        let (field, graph) = prepare(config, field)?;
        return Ok(TrialResult {
            index,
            seed,
            levels: vec![],
            gmc: vec![],
            busemann_samples: vec![],
            restricted: restricted_samples(config, &graph)?,
            weyl_residual: weyl_residual_of(config, &field, &graph)?,
            domination_violations: 0,
            identity_checks: 0,
            identity_violations: 0,
            max_identity_error: 0.0,
        });
    }
    let a = FieldAnalysis::new(config, field)?;
    let profile = a.profile(config)?;
    let mut levels = Vec::with_capacity(config.levels.len());
    let mut checks = LevelChecks::default();
    for &n in &config.levels {
        let (level, c) = a.level(config, &profile, n)?;
        levels.push(level);
        checks.domination_violations += c.domination_violations;
        checks.identity_checks += c.identity_checks;
        checks.identity_violations += c.identity_violations;
        checks.max_identity_error = checks.max_identity_error.max(c.max_identity_error);
    }
    Ok(TrialResult {
        index,
        seed,
        levels,
        gmc: a.gmc_masses(config)?,
        busemann_samples: a.busemann_samples(config)?,
        restricted: a.restricted(config)?,
        weyl_residual: a.weyl_residual(config)?,
        domination_violations: checks.domination_violations,
        identity_checks: checks.identity_checks,
        identity_violations: checks.identity_violations,
        max_identity_error: checks.max_identity_error,
    })
}

/// The normalized field of trial `index`.
pub fn trial_field(config: &TrialConfig, source: &dyn FieldSource, index: u64) -> Result<FieldGrid> {
    source.sample(trial_seed(config.master_seed, index))?.normalize()
}

/// A validated configuration with its field sampler.
pub struct Experiment {
    pub config: TrialConfig,
    source: Box<dyn FieldSource>,
}

impl Experiment {
    pub fn new(config: TrialConfig) -> Result<Self> {
        config.validate()?;
        let source = sampler(config.grid, config.sampler)?;
        Ok(Experiment { config, source })
    }

    pub fn source(&self) -> &dyn FieldSource {
        self.source.as_ref()
    }

    pub fn field(&self, index: u64) -> Result<FieldGrid> {
        trial_field(&self.config, self.source.as_ref(), index)
    }

    /// Trial `index`, a pure function of `(config, master_seed, index)`.
    pub fn run_trial(&self, index: u64) -> Result<TrialResult> {
        let wrap = |e| Error::Trial { index, source: Box::new(e) };
        let field = self.field(index).map_err(wrap)?;
        analyze_field(&self.config, field, index).map_err(wrap)
    }

    /// All trials on the current rayon pool, returned in index order.
    pub fn run_all(&self) -> Result<Vec<TrialResult>> {
        use rayon::prelude::*;
        (0..self.config.trials as u64).into_par_iter().map(|k| self.run_trial(k)).collect()
    }
}

/// Convenience wrapper building the sampler on each call.
pub fn run_trial(config: &TrialConfig, index: u64) -> Result<TrialResult> {
    Experiment::new(config.clone())?.run_trial(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small() -> TrialConfig {
        TrialConfig {
            grid: GridSpec::centered(256, 136, 1.0 / 64.0).unwrap(),
            epsilon: 2.0 / 64.0,
            levels: vec![3],
            trials: 4,
            far_arc_radius: 0.75,
            ..TrialConfig::standard()
        }
    }

    #[test]
    fn trials_are_reproducible_and_distinct() {
        let exp = Experiment::new(small()).unwrap();
        let a = exp.run_trial(0).unwrap();
        assert_eq!(a, exp.run_trial(0).unwrap());
        let b = exp.run_trial(1).unwrap();
        assert_ne!(a.seed, b.seed);
        assert_ne!(a.gmc, b.gmc);
    }

    #[test]
    fn parallel_run_matches_serial() {
        let exp = Experiment::new(small()).unwrap();
        let serial: Vec<TrialResult> = (0..4).map(|k| exp.run_trial(k).unwrap()).collect();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let parallel = pool.install(|| exp.run_all()).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn per_trial_hard_checks() {
        let c = small();
        let r = run_trial(&c, 2).unwrap();
        assert_eq!(r.domination_violations, 0);
        assert_eq!(r.identity_violations, 0);
        assert!(r.weyl_residual <= 1e-9);
        assert_eq!(r.gmc.len(), c.intervals);
        assert_eq!(r.levels[0].atoms.len(), 8);
        assert_eq!(r.restricted.len(), c.separations.len() * c.separation_mids.len());
        assert_eq!(r.atom_rows().len(), 3 * 8);
        for l in &r.levels {
            for (p, q) in l.profile.iter().zip(&l.proxy) {
                assert!(*p <= q * (1.0 + 1e-12), "{p} > {q}");
            }
        }
    }

    #[test]
    fn restricted_mode_skips_the_trees() {
        let mut c = small();
        c.measurements = Measurements::RestrictedDistances;
        let r = run_trial(&c, 2).unwrap();
        assert!(r.levels.is_empty() && r.gmc.is_empty() && r.busemann_samples.is_empty());
        assert_eq!(r.restricted, run_trial(&small(), 2).unwrap().restricted);
    }

    #[test]
    fn far_arc_lies_on_the_circle() {
        let g = small().grid;
        let vs = far_arc_vertices(&g, 0.75).unwrap();
        assert!(vs.windows(2).all(|w| w[0] < w[1]));
        for v in vs {
            assert!((g.position(v).norm() - 0.75).abs() <= g.spacing);
        }
    }

    #[test]
    fn mismatched_field_is_rejected() {
        let c = small();
        let other = FieldGrid::zeros(GridSpec::centered(64, 64, 1.0 / 64.0).unwrap());
        assert!(analyze_field(&c, other, 0).is_err());
    }
}
