//! Geodesic tracing, coalescence detection and Busemann differences.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Point};
use crate::metric::GeodesicTree;
use crate::params::CoalescenceConfig;

/// Predecessor chain from `target` back to a source, target first.
pub fn trace_geodesic(tree: &GeodesicTree, target: usize) -> Result<Vec<usize>> {
    if target >= tree.len() || !tree.dist[target].is_finite() {
        return Err(Error::Domain(format!("vertex {target} is unreachable")));
    }
    let mut path = vec![target];
    let mut v = target;
    while let Some(p) = tree.pred_of(v) {
        path.push(p);
        v = p;
    }
    Ok(path)
}

/// Sum of the edge weights along a traced path, accumulated from the source end.
pub fn path_length(path: &[usize], weight: impl Fn(usize, usize) -> f64) -> f64 {
    path.windows(2).rev().map(|w| weight(w[1], w[0])).sum()
}

/// The first vertex shared by the two geodesics when walking back from the
/// targets: their lowest common ancestor in the tree. `None` when they end at
/// different sources.
pub fn coalescence_point(tree: &GeodesicTree, u: usize, u_plus: usize) -> Option<usize> {
    if u == u_plus {
        return Some(u);
    }
    let mut seen = HashSet::new();
    let mut v = u;
    seen.insert(v);
    while let Some(p) = tree.pred_of(v) {
        seen.insert(p);
        v = p;
    }
    let mut v = u_plus;
    loop {
        if seen.contains(&v) {
            return Some(v);
        }
        v = tree.pred_of(v)?;
    }
}

/// Whether `w` lies on the tree path from `v` to the sources.
pub fn is_ancestor(tree: &GeodesicTree, w: usize, mut v: usize) -> bool {
    loop {
        if v == w {
            return true;
        }
        match tree.pred_of(v) {
            Some(p) => v = p,
            None => return false,
        }
    }
}

/// `𝔅(u, u⁺) ≈ D(far, u) − D(far, u⁺)`.
pub fn busemann_diff(far_tree: &GeodesicTree, u: usize, u_plus: usize) -> Result<f64> {
    let (a, b) = (far_tree.dist[u], far_tree.dist[u_plus]);
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("vertex {u} or {u_plus} is unreachable from the far set")));
    }
    Ok(if u == u_plus { 0.0 } else { a - b })
}

/// Coalescence data of one dyadic pair `(u, u⁺)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceRecord {
    pub n: u32,
    pub u: f64,
    pub u_plus: f64,
    /// Lowest common ancestor in the far tree.
    pub w: Option<usize>,
    /// `|w − (u+u⁺)/2|`, `+∞` without coalescence.
    pub coalescence_radius: f64,
    /// Largest distance from the midpoint reached by either geodesic before `w`.
    pub excursion: f64,
    /// `w` also lies on the geodesics from `u` and `u⁺` to every reference point.
    pub shared: bool,
    pub busemann: f64,
    pub good: bool,
}

impl CoalescenceRecord {
    pub fn coalesced(&self) -> bool {
        self.w.is_some()
    }
}

/// Builds the record of `(u, u⁺)` from the far tree and the reference trees.
/// `good` is left false; see [`classify_good`].
pub fn coalescence_record(
    grid: &GridSpec,
    far_tree: &GeodesicTree,
    references: &[&GeodesicTree],
    n: u32,
    u: f64,
    u_plus: f64,
) -> Result<CoalescenceRecord> {
    let a = grid.boundary_vertex(u)?;
    let b = grid.boundary_vertex(u_plus)?;
    let busemann = busemann_diff(far_tree, a, b)?;
    let mid = Point::boundary(0.5 * (u + u_plus));
    let w = coalescence_point(far_tree, a, b);
    let (radius, excursion, shared) = match w {
        None => (f64::INFINITY, f64::INFINITY, false),
        Some(w) => {
            let mut excursion: f64 = 0.0;
            for start in [a, b] {
                let mut v = start;
                loop {
                    excursion = excursion.max(grid.position(v).dist(mid));
                    if v == w {
                        break;
                    }
                    v = far_tree.pred_of(v).expect("w is an ancestor");
                }
            }
            let shared = references.iter().all(|t| is_ancestor(t, w, a) && is_ancestor(t, w, b));
            (grid.position(w).dist(mid), excursion, shared)
        }
    };
    Ok(CoalescenceRecord { n, u, u_plus, w, coalescence_radius: radius, excursion, shared, busemann, good: false })
}

/// Marks a pair good when its geodesics coalesce within `2^{-n(1−α₂)}` of the
/// midpoint (closed inequality), stay within `annulus_ratio` times that
/// radius until they meet, and meet at a point shared by every reference geodesic.
pub fn classify_good(records: &mut [CoalescenceRecord], cfg: &CoalescenceConfig) -> Vec<bool> {
    records
        .iter_mut()
        .map(|r| {
            let outer = cfg.outer_radius(r.n);
            r.good = r.w.is_some()
                && r.shared
                && r.coalescence_radius <= outer
                && r.excursion <= cfg.annulus_ratio * outer;
            r.good
        })
        .collect()
}

/// One row of the coalescence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceRow {
    pub trial: u64,
    pub n: u32,
    pub u: f64,
    pub coalesced: bool,
    pub radius: f64,
    pub good: bool,
    pub busemann_diff: f64,
}

pub fn write_coalescence_csv(w: impl Write, trial: u64, records: &[CoalescenceRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(CoalescenceRow {
            trial,
            n: r.n,
            u: r.u,
            coalesced: r.coalesced(),
            radius: r.coalescence_radius,
            good: r.good,
            busemann_diff: r.busemann,
        })
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::NO_PRED;

    /// A hand-built tree: 0 is the source; 1,2 hang off 0; 3,4 off 1; 5 off 3.
    fn tree() -> GeodesicTree {
        GeodesicTree {
            sources: vec![0],
            dist: vec![0.0, 1.0, 2.0, 1.5, 3.0, 2.5],
            pred: vec![NO_PRED, 0, 0, 1, 1, 3],
        }
    }

    #[test]
    fn lca_on_hand_tree() {
        let t = tree();
        assert_eq!(coalescence_point(&t, 5, 4), Some(1));
        assert_eq!(coalescence_point(&t, 5, 2), Some(0));
        assert_eq!(coalescence_point(&t, 5, 3), Some(3));
        assert_eq!(coalescence_point(&t, 4, 4), Some(4));
        assert_eq!(trace_geodesic(&t, 5).unwrap(), vec![5, 3, 1, 0]);
        assert_eq!(trace_geodesic(&t, 0).unwrap(), vec![0]);
        assert!(is_ancestor(&t, 1, 5) && !is_ancestor(&t, 2, 5));
    }

    #[test]
    fn distinct_sources_do_not_coalesce() {
        let t = GeodesicTree { sources: vec![0, 1], dist: vec![0.0, 0.0, 1.0, 1.0], pred: vec![NO_PRED, NO_PRED, 0, 1] };
        assert_eq!(coalescence_point(&t, 2, 3), None);
    }

    #[test]
    fn busemann_is_a_distance_difference() {
        let t = GeodesicTree { sources: vec![0], dist: vec![0.0, 3.0, 2.5, f64::INFINITY], pred: vec![NO_PRED, 0, 0, NO_PRED] };
        assert_eq!(busemann_diff(&t, 1, 2).unwrap(), 0.5);
        assert_eq!(busemann_diff(&t, 1, 1).unwrap(), 0.0);
        assert!(busemann_diff(&t, 1, 3).is_err());
    }

    #[test]
    fn threshold_is_closed() {
        let cfg = CoalescenceConfig::default();
        let r = cfg.outer_radius(3);
        let mut recs = vec![
            CoalescenceRecord { n: 3, u: 0.0, u_plus: 0.125, w: Some(1), coalescence_radius: r, excursion: r, shared: true, busemann: 0.0, good: false },
            CoalescenceRecord { n: 3, u: 0.0, u_plus: 0.125, w: Some(1), coalescence_radius: r * (1.0 + 1e-12), excursion: r, shared: true, busemann: 0.0, good: false },
            CoalescenceRecord { n: 3, u: 0.0, u_plus: 0.125, w: None, coalescence_radius: f64::INFINITY, excursion: f64::INFINITY, shared: false, busemann: 0.0, good: false },
        ];
        assert_eq!(classify_good(&mut recs, &cfg), vec![true, false, false]);
    }
}
