//! Points of the closed upper half-plane, boundary intervals and lattice geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the closed upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub const fn boundary(x: f64) -> Self {
        Point { x, y: 0.0 }
    }

    pub fn conj(self) -> Self {
        Point::new(self.x, -self.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

/// A boundary interval. Atom sums use the half-open convention `[lo, hi)` so
/// that adjacent intervals are disjoint and masses are additive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::param("interval", format!("[{lo}, {hi}] is not a valid interval")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    /// Splits into `count` equal, adjacent sub-intervals.
    pub fn split(&self, count: usize) -> Vec<Interval> {
        let step = self.len() / count as f64;
        (0..count)
            .map(|k| Interval {
                lo: self.lo + step * k as f64,
                hi: if k + 1 == count { self.hi } else { self.lo + step * (k + 1) as f64 },
            })
            .collect()
    }
}

/// Geometry of a regular lattice on `[origin_x, origin_x + (nx-1)·spacing] × [0, (ny-1)·spacing]`.
/// Row `j = 0` lies on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin_x: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, spacing: f64, origin_x: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::param("grid", format!("extent {nx}x{ny} must be at least 2x2")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::param("spacing", format!("{spacing} must be positive")));
        }
        if !origin_x.is_finite() {
            return Err(Error::param("origin_x", "must be finite"));
        }
        if nx.checked_mul(ny).is_none_or(|n| n > u32::MAX as usize - 1) {
            return Err(Error::param("grid", "too many vertices"));
        }
        Ok(GridSpec { nx, ny, spacing, origin_x })
    }

    /// A grid with a node at the origin and the columns split as evenly as possible around it.
    pub fn centered(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        GridSpec::new(nx, ny, spacing, -(((nx - 1) / 2) as f64) * spacing)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_max(&self) -> f64 {
        self.origin_x + (self.nx - 1) as f64 * self.spacing
    }

    pub fn y_max(&self) -> f64 {
        (self.ny - 1) as f64 * self.spacing
    }

    pub fn width(&self) -> f64 {
        (self.nx - 1) as f64 * self.spacing
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.nx, v / self.nx)
    }

    #[inline]
    pub fn position(&self, v: usize) -> Point {
        let (i, j) = self.coords(v);
        Point::new(self.origin_x + i as f64 * self.spacing, j as f64 * self.spacing)
    }

    /// Whether `p` lies inside the closed box covered by the lattice.
    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-9 * self.spacing;
        p.y >= -tol && p.y <= self.y_max() + tol && p.x >= self.origin_x - tol && p.x <= self.x_max() + tol
    }

    /// Whether the closed disk of radius `r` about `c`, intersected with the
    /// half-plane, lies inside the lattice box.
    pub fn covers_disk(&self, c: Point, r: f64) -> bool {
        self.contains(Point::new(c.x - r, (c.y - r).max(0.0))) && self.contains(Point::new(c.x + r, c.y + r))
    }

    /// The vertex at `p`, which must coincide with a lattice node.
    pub fn vertex_at(&self, p: Point) -> Result<usize> {
        let fi = (p.x - self.origin_x) / self.spacing;
        let fj = p.y / self.spacing;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > 1e-6 || (fj - rj).abs() > 1e-6 {
            return Err(Error::Domain(format!("({}, {}) is not a lattice node", p.x, p.y)));
        }
        if ri < 0.0 || rj < 0.0 || ri as usize >= self.nx || rj as usize >= self.ny {
            return Err(Error::Domain(format!("({}, {}) lies outside the grid", p.x, p.y)));
        }
        Ok(self.index(ri as usize, rj as usize))
    }

    /// The lattice node closest to `p`.
    pub fn nearest_vertex(&self, p: Point) -> Result<usize> {
        if !self.contains(p) {
            return Err(Error::Domain(format!("({}, {}) lies outside the grid", p.x, p.y)));
        }
        let i = (((p.x - self.origin_x) / self.spacing).round() as usize).min(self.nx - 1);
        let j = ((p.y / self.spacing).round() as usize).min(self.ny - 1);
        Ok(self.index(i, j))
    }

    /// The boundary vertex at abscissa `x`.
    pub fn boundary_vertex(&self, x: f64) -> Result<usize> {
        self.vertex_at(Point::boundary(x))
    }

    /// Whether every point of interest keeps the required margin from the
    /// left, right and top edges: a quarter of the box width.
    pub fn respects_margin(&self, p: Point, radius: f64) -> bool {
        let margin = 0.25 * self.width();
        let tol = 1e-9 * self.spacing;
        p.x - radius >= self.origin_x + margin - tol
            && p.x + radius <= self.x_max() - margin + tol
            && p.y + radius <= self.y_max() - margin + tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_is_symmetric() {
        let g = GridSpec::centered(9, 5, 0.25).unwrap();
        assert_eq!(g.origin_x, -1.0);
        assert_eq!(g.x_max(), 1.0);
        assert_eq!(g.boundary_vertex(0.0).unwrap(), 4);
        assert_eq!(g.vertex_at(Point::new(0.5, 0.25)).unwrap(), g.index(6, 1));
        assert!(g.vertex_at(Point::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn split_tiles_the_interval() {
        let parts = Interval::new(-0.5, 0.5).unwrap().split(8);
        assert_eq!(parts.len(), 8);
        assert_eq!(parts[0].lo, -0.5);
        assert_eq!(parts[7].hi, 0.5);
        for w in parts.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
    }

    #[test]
    fn margin_rule() {
        let g = GridSpec::centered(1025, 513, 1.0 / 256.0).unwrap();
        assert!(g.respects_margin(Point::new(0.0, 0.75), 0.0));
        assert!(g.respects_margin(Point::new(0.0, 0.0), 1.0));
        assert!(!g.respects_margin(Point::new(0.0, 0.5), 0.6));
    }
}
