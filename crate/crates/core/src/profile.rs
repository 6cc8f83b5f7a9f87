//! Boundary distance profiles and the variation measures built from them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::CoalescenceRecord;
use crate::geometry::{Interval, Point};
use crate::metric::{shortest_paths, GeodesicTree, MetricGraph};
use crate::params::{normalization_exponent, variation_exponent, LqgParams};

/// Distances from a reference set to the boundary nodes of a closed interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub xs: Vec<f64>,
    pub distances: Vec<f64>,
    pub spacing: f64,
}

impl DistanceProfile {
    /// A profile on the evenly spaced abscissae `xs`.
    pub fn new(xs: Vec<f64>, distances: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != distances.len() {
            return Err(Error::param("profile", "need at least two points and one distance per point"));
        }
        let spacing = xs[1] - xs[0];
        if !(spacing > 0.0) || xs.windows(2).any(|w| ((w[1] - w[0]) - spacing).abs() > 1e-9 * spacing) {
            return Err(Error::param("profile", "abscissae must be increasing and evenly spaced"));
        }
        if let Some(k) = distances.iter().position(|d| !d.is_finite()) {
            return Err(Error::Domain(format!("profile point {} is unreachable", xs[k])));
        }
        Ok(DistanceProfile { xs, distances, spacing })
    }

    /// Index of the node at `x`, if it is one of the profile points.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let f = (x - self.xs[0]) / self.spacing;
        let k = f.round();
        ((f - k).abs() < 1e-6 && k >= 0.0 && (k as usize) < self.xs.len()).then_some(k as usize)
    }

    pub fn at(&self, x: f64) -> Option<f64> {
        self.index_of(x).map(|k| self.distances[k])
    }
}

/// Reads `tree` at every boundary node of the closed `interval`.
pub fn distance_profile(tree: &GeodesicTree, graph: &MetricGraph, interval: Interval) -> Result<DistanceProfile> {
    let g = &graph.grid;
    let first = g.boundary_vertex(interval.lo)?;
    let last = g.boundary_vertex(interval.hi)?;
    if tree.len() != g.len() {
        return Err(Error::param("tree", "tree and graph sizes differ"));
    }
    let xs: Vec<f64> = (first..=last).map(|v| g.position(v).x).collect();
    let distances = (first..=last).map(|v| tree.dist[v]).collect();
    DistanceProfile::new(xs, distances)
}

/// Atoms at the dyadic points of one level. `flagged` marks atoms whose
/// increment could not be certified (busemann flavor only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationMeasure {
    pub n: u32,
    pub interval: Interval,
    pub us: Vec<f64>,
    pub atoms: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl VariationMeasure {
    pub fn total(&self) -> f64 {
        self.atoms.iter().sum()
    }

    /// Mass of atoms with `u ∈ [sub.lo, sub.hi)`.
    pub fn mass(&self, sub: Interval) -> f64 {
        let tol = 1e-9 * dyadic_step(self.n);
        self.us
            .iter()
            .zip(&self.atoms)
            .filter(|(u, _)| **u >= sub.lo - tol && **u < sub.hi - tol)
            .map(|(_, a)| a)
            .sum()
    }

    pub fn atom_at(&self, u: f64) -> Option<f64> {
        let tol = 1e-9 * dyadic_step(self.n);
        self.us.iter().position(|x| (x - u).abs() < tol).map(|k| self.atoms[k])
    }
}

pub fn dyadic_step(n: u32) -> f64 {
    (-(n as f64)).exp2()
}

/// The points of `2^{-n}ℤ ∩ [lo, hi)`.
pub fn dyadic_points(n: u32, interval: Interval) -> Vec<f64> {
    let step = dyadic_step(n);
    let k0 = (interval.lo / step - 1e-9).ceil() as i64;
    let k1 = (interval.hi / step - 1e-9).ceil() as i64;
    (k0..k1).map(|k| k as f64 * step).collect()
}

/// Checks that `2^{-n}` is a whole number of lattice steps.
pub fn check_dyadic_alignment(n: u32, spacing: f64) -> Result<usize> {
    let ratio = dyadic_step(n) / spacing;
    let cells = ratio.round();
    if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) || cells < 1.0 {
        return Err(Error::Resolution(format!(
            "level {n} is not aligned with the lattice: 2^-{n} / {spacing} = {ratio}"
        )));
    }
    Ok(cells as usize)
}

fn weights(params: &LqgParams, n: u32) -> (f64, f64) {
    (variation_exponent(params), (-(n as f64) * normalization_exponent(params)).exp2())
}

fn power(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.abs().powf(e)
    }
}

/// `2^{-n(1−ψ)} Σ_u |D(z,u) − D(z,u⁺)|^{γ'd_γ/(2γ)} δ_u` over `u ∈ Πₙ ∩ [lo, hi)`.
/// Terms whose `u⁺` falls outside the profile are skipped.
pub fn variation_measure(profile: &DistanceProfile, n: u32, params: &LqgParams, interval: Interval) -> Result<VariationMeasure> {
    let cells = check_dyadic_alignment(n, profile.spacing)?;
    let (exponent, norm) = weights(params, n);
    let mut us = Vec::new();
    let mut atoms = Vec::new();
    for u in dyadic_points(n, interval) {
        let Some(k) = profile.index_of(u) else { continue };
        if k + cells >= profile.xs.len() {
            continue;
        }
        us.push(u);
        atoms.push(norm * power(profile.distances[k] - profile.distances[k + cells], exponent));
    }
    let flagged = vec![false; us.len()];
    Ok(VariationMeasure { n, interval, us, atoms, flagged })
}

/// `D(x, y; 𝔻_{|y−x|}((x+y)/2))`, the distance inside the half-disk about
/// the midpoint with radius equal to the separation.
pub fn restricted_distance(graph: &MetricGraph, x: f64, y: f64) -> Result<f64> {
    restricted_distance_in(graph, x, y, Point::boundary(0.5 * (x + y)), (y - x).abs())
}

/// Distance between boundary points `u` and `v` within the half-disk `𝔻_r(c)`.
pub fn restricted_distance_in(graph: &MetricGraph, u: f64, v: f64, c: Point, r: f64) -> Result<f64> {
    let g = &graph.grid;
    if 2.0 * r / g.spacing < 8.0 - 1e-9 {
        return Err(Error::Resolution(format!("half-disk of radius {r} spans fewer than 8 lattice cells")));
    }
    let (sub, c0) = graph.half_disk(c, r)?;
    let a = graph.to_window_vertex(&sub, c0, g.boundary_vertex(u)?);
    let b = graph.to_window_vertex(&sub, c0, g.boundary_vertex(v)?);
    let (Some(a), Some(b)) = (a, b) else {
        return Err(Error::Domain(format!("boundary points {u}, {v} are outside the half-disk")));
    };
    Ok(shortest_paths(&sub, &[a])?.dist[b])
}

/// The local proxy `2^{-n(1−ψ)} Σ_u D(u,u⁺; 𝔻_{2^{-n}}(mid))^{γ'd_γ/(2γ)} δ_u`.
pub fn local_proxy_measure(graph: &MetricGraph, n: u32, params: &LqgParams, interval: Interval) -> Result<VariationMeasure> {
    check_dyadic_alignment(n, graph.grid.spacing)?;
    let (exponent, norm) = weights(params, n);
    let step = dyadic_step(n);
    let mut us = Vec::new();
    let mut atoms = Vec::new();
    for u in dyadic_points(n, interval) {
        let d = restricted_distance(graph, u, u + step)?;
        us.push(u);
        atoms.push(norm * power(d, exponent));
    }
    let flagged = vec![false; us.len()];
    Ok(VariationMeasure { n, interval, us, atoms, flagged })
}

/// Atoms `2^{-n(1−ψ)} |𝔅(u,u⁺)|^{γ'd_γ/(2γ)}` from coalescence records.
/// Pairs without a detected coalescence point are flagged.
pub fn busemann_variation_measure(
    records: &[CoalescenceRecord],
    n: u32,
    params: &LqgParams,
    interval: Interval,
) -> VariationMeasure {
    let (exponent, norm) = weights(params, n);
    let tol = 1e-9 * dyadic_step(n);
    let mut m = VariationMeasure { n, interval, us: vec![], atoms: vec![], flagged: vec![] };
    for r in records.iter().filter(|r| r.u >= interval.lo - tol && r.u < interval.hi - tol) {
        m.us.push(r.u);
        m.atoms.push(if r.u == r.u_plus { 0.0 } else { norm * power(r.busemann, exponent) });
        m.flagged.push(r.w.is_none());
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Profile,
    LocalProxy,
    Busemann,
}

/// One row of the variation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub trial: u64,
    pub n: u32,
    pub u: f64,
    pub atom_mass: f64,
    pub flavor: Flavor,
    pub good_flag: bool,
}

pub fn write_atoms_csv(w: impl Write, rows: &[AtomRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// `x,distance` rows of a profile.
pub fn write_profile_csv(w: impl Write, profile: &DistanceProfile) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Format(e.to_string());
    out.write_record(["x", "distance"]).map_err(err)?;
    for (x, d) in profile.xs.iter().zip(&profile.distances) {
        out.write_record([x.to_string(), d.to_string()]).map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LqgParams;

    fn flat() -> LqgParams {
        LqgParams::brownian()
    }

    #[test]
    fn hand_computed_atoms() {
        let p = DistanceProfile::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 3.0]).unwrap();
        let m = variation_measure(&p, 1, &flat(), Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(m.us, vec![0.0, 0.5]);
        assert!((m.atoms[0] - 1.0).abs() < 1e-12 && (m.atoms[1] - 4.0).abs() < 1e-12);
        assert!((m.total() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn linear_and_constant_profiles() {
        let xs: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
        let lin = DistanceProfile::new(xs.clone(), xs.clone()).unwrap();
        for n in 1..=5 {
            let m = variation_measure(&lin, n, &flat(), Interval::new(0.0, 1.0).unwrap()).unwrap();
            assert_eq!(m.us.len(), 1 << n);
            assert!((m.total() - dyadic_step(n)).abs() < 1e-12);
        }
        let constant = DistanceProfile::new(xs.clone(), vec![2.0; xs.len()]).unwrap();
        let m = variation_measure(&constant, 3, &flat(), Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(m.total(), 0.0);
        assert!(variation_measure(&lin, 7, &flat(), Interval::new(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn right_edge_term_is_skipped() {
        let xs: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let p = DistanceProfile::new(xs.clone(), xs).unwrap();
        let m = variation_measure(&p, 2, &flat(), Interval::new(0.5, 1.25).unwrap()).unwrap();
        assert_eq!(m.us, vec![0.5, 0.75]);
    }

    #[test]
    fn dyadic_points_are_half_open() {
        let pts = dyadic_points(3, Interval::new(-0.5, 0.0).unwrap());
        assert_eq!(pts, vec![-0.5, -0.375, -0.25, -0.125]);
    }
}
