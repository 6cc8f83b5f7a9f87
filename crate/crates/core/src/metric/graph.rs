//! LFPP weight graphs on the 8-neighbor lattice.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Point};
use crate::gff::FieldGrid;
use crate::params::LqgParams;

use super::mollify::mollify;

/// Edge slots stored at the lower/left endpoint: east, north, north-east, north-west.
const E: usize = 0;
const N: usize = 1;
const NE: usize = 2;
const NW: usize = 3;

/// Undirected lattice graph with weights `a_ε⁻¹ · len(e) · exp(ξ·h*_ε(midpoint(e)))`.
/// Absent edges carry `+∞`.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub a_eps: f64,
    pub xi: f64,
    weights: Vec<[f64; 4]>,
    mask: Option<Vec<bool>>,
}

/// Mollifies `field` at scale `epsilon` and builds the weight graph.
pub fn build_graph(
    field: &FieldGrid,
    params: &LqgParams,
    epsilon: f64,
    a_eps: f64,
    mask: Option<Vec<bool>>,
) -> Result<MetricGraph> {
    let smooth = mollify(field, epsilon)?;
    MetricGraph::from_smoothed(&smooth, params.xi, epsilon, a_eps, mask)
}

impl MetricGraph {
    /// Builds the graph from an already mollified field.
    pub fn from_smoothed(
        smooth: &FieldGrid,
        xi: f64,
        epsilon: f64,
        a_eps: f64,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if !(a_eps.is_finite() && a_eps > 0.0) {
            return Err(Error::param("a_eps", format!("{a_eps} must be positive")));
        }
        let grid = smooth.grid;
        if let Some(m) = &mask {
            if m.len() != grid.len() {
                return Err(Error::param("mask", format!("length {} does not match {} vertices", m.len(), grid.len())));
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::param("mask", "mask is empty"));
            }
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let h = smooth.values();
        let axis = grid.spacing / a_eps;
        let diag = SQRT_2 * grid.spacing / a_eps;
        let inside = |v: usize| mask.as_ref().is_none_or(|m| m[v]);
        let mut weights = vec![[f64::INFINITY; 4]; grid.len()];
        for j in 0..ny {
            for i in 0..nx {
                let v = j * nx + i;
                if !inside(v) {
                    continue;
                }
                let w = &mut weights[v];
                if i + 1 < nx && inside(v + 1) {
                    w[E] = axis * (xi * 0.5 * (h[v] + h[v + 1])).exp();
                }
                if j + 1 < ny {
                    let up = v + nx;
                    if inside(up) {
                        w[N] = axis * (xi * 0.5 * (h[v] + h[up])).exp();
                    }
                    if i + 1 < nx && inside(up + 1) {
                        let c = 0.25 * (h[v] + h[v + 1] + h[up] + h[up + 1]);
                        w[NE] = diag * (xi * c).exp();
                    }
                    if i > 0 && inside(up - 1) {
                        let c = 0.25 * (h[v] + h[v - 1] + h[up] + h[up - 1]);
                        w[NW] = diag * (xi * c).exp();
                    }
                }
            }
        }
        if let Some(k) = weights.iter().flatten().position(|w| !(*w > 0.0)) {
            return Err(Error::Numerical(format!("edge weight {k} is not positive")));
        }
        Ok(MetricGraph { grid, epsilon, a_eps, xi, weights, mask })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.len() && self.mask.as_ref().is_none_or(|m| m[v])
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Calls `f(neighbor, weight)` for every present edge at `v`.
    #[inline]
    pub fn for_each_neighbor(&self, v: usize, mut f: impl FnMut(usize, f64)) {
        let nx = self.grid.nx;
        let (i, j) = (v % nx, v / nx);
        let w = &self.weights[v];
        let mut emit = |u: usize, wt: f64| {
            if wt.is_finite() {
                f(u, wt)
            }
        };
        if i + 1 < nx {
            emit(v + 1, w[E]);
        }
        if i > 0 {
            emit(v - 1, self.weights[v - 1][E]);
        }
        if j + 1 < self.grid.ny {
            emit(v + nx, w[N]);
            if i + 1 < nx {
                emit(v + nx + 1, w[NE]);
            }
            if i > 0 {
                emit(v + nx - 1, w[NW]);
            }
        }
        if j > 0 {
            emit(v - nx, self.weights[v - nx][N]);
            if i > 0 {
                emit(v - nx - 1, self.weights[v - nx - 1][NE]);
            }
            if i + 1 < nx {
                emit(v - nx + 1, self.weights[v - nx + 1][NW]);
            }
        }
    }

    /// Weight of the edge `{u, v}`, `+∞` if absent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        let mut out = f64::INFINITY;
        if u < self.len() && v < self.len() {
            self.for_each_neighbor(u, |x, w| {
                if x == v {
                    out = w;
                }
            });
        }
        out
    }

    /// Induced subgraph on the rows `0..rows` and columns `cols.0..=cols.1`,
    /// further restricted to vertices where `keep` holds.
    pub fn window(
        &self,
        cols: (usize, usize),
        rows: usize,
        keep: impl Fn(Point) -> bool,
    ) -> Result<MetricGraph> {
        let (c0, c1) = cols;
        if c1 >= self.grid.nx || c0 >= c1 || rows < 2 || rows > self.grid.ny {
            return Err(Error::Domain(format!("window columns {c0}..={c1}, rows 0..{rows} do not fit the grid")));
        }
        let grid = GridSpec::new(
            c1 - c0 + 1,
            rows,
            self.grid.spacing,
            self.grid.origin_x + c0 as f64 * self.grid.spacing,
        )?;
        let mut mask = Vec::with_capacity(grid.len());
        let mut weights = Vec::with_capacity(grid.len());
        for j in 0..rows {
            for i in c0..=c1 {
                let v = self.grid.index(i, j);
                let wv = grid.index(i - c0, j);
                mask.push(self.contains(v) && keep(grid.position(wv)));
                let mut w = self.weights[v];
                if i == c1 {
                    w[E] = f64::INFINITY;
                    w[NE] = f64::INFINITY;
                }
                if i == c0 {
                    w[NW] = f64::INFINITY;
                }
                if j + 1 == rows {
                    w[N] = f64::INFINITY;
                    w[NE] = f64::INFINITY;
                    w[NW] = f64::INFINITY;
                }
                weights.push(w);
            }
        }
        // Drop edges leaving the mask.
        let nx = grid.nx;
        for v in 0..weights.len() {
            let (i, j) = (v % nx, v / nx);
            let targets = [
                (i + 1 < nx).then(|| v + 1),
                (j + 1 < rows).then(|| v + nx),
                (i + 1 < nx && j + 1 < rows).then(|| v + nx + 1),
                (i > 0 && j + 1 < rows).then(|| v + nx - 1),
            ];
            for (slot, t) in targets.iter().enumerate() {
                if !mask[v] || t.is_none_or(|t| !mask[t]) {
                    weights[v][slot] = f64::INFINITY;
                }
            }
        }
        if !mask.iter().any(|&b| b) {
            return Err(Error::param("mask", "window mask is empty"));
        }
        Ok(MetricGraph { grid, epsilon: self.epsilon, a_eps: self.a_eps, xi: self.xi, weights, mask: Some(mask) })
    }

    /// Induced subgraph on the closed half-disk `𝔻_r(c)`, as a window.
    pub fn half_disk(&self, c: Point, r: f64) -> Result<(MetricGraph, usize)> {
        let g = &self.grid;
        if !g.covers_disk(c, r) {
            return Err(Error::Domain(format!("half-disk of radius {r} about ({}, {}) leaves the grid", c.x, c.y)));
        }
        let tol = 1e-9 * g.spacing;
        let c0 = (((c.x - r - g.origin_x) / g.spacing - 1e-9).ceil().max(0.0)) as usize;
        let c1 = ((((c.x + r - g.origin_x) / g.spacing) + 1e-9).floor() as usize).min(g.nx - 1);
        let rows = ((((c.y + r) / g.spacing) + 1e-9).floor() as usize + 1).min(g.ny);
        let sub = self.window((c0, c1), rows, |p| p.dist(c) <= r + tol)?;
        Ok((sub, c0))
    }

    /// Maps a vertex of a window created at column offset `c0` back to this graph.
    pub fn from_window_vertex(&self, window: &MetricGraph, c0: usize, v: usize) -> usize {
        let (i, j) = window.grid.coords(v);
        self.grid.index(i + c0, j)
    }

    /// Maps a vertex of this graph into a window at column offset `c0`.
    pub fn to_window_vertex(&self, window: &MetricGraph, c0: usize, v: usize) -> Option<usize> {
        let (i, j) = self.grid.coords(v);
        (i >= c0 && i - c0 < window.grid.nx && j < window.grid.ny).then(|| window.grid.index(i - c0, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_weights_are_euclidean() {
        let grid = GridSpec::centered(6, 5, 0.5).unwrap();
        let g = MetricGraph::from_smoothed(&FieldGrid::zeros(grid), 0.4, 0.5, 1.0, None).unwrap();
        let v = grid.index(2, 2);
        let mut seen = 0;
        g.for_each_neighbor(v, |u, w| {
            let d = grid.position(u).dist(grid.position(v));
            assert!((w - d).abs() < 1e-15);
            seen += 1;
        });
        assert_eq!(seen, 8);
        let mut corner = 0;
        g.for_each_neighbor(0, |_, _| corner += 1);
        assert_eq!(corner, 3);
    }

    #[test]
    fn constant_shift_scales_weights() {
        let grid = GridSpec::centered(10, 8, 0.25).unwrap();
        let f = FieldGrid::from_fn(grid, |p| (2.0 * p.x).sin() + p.y).unwrap();
        let xi = 0.4;
        let a = MetricGraph::from_smoothed(&f, xi, 0.25, 1.0, None).unwrap();
        let b = MetricGraph::from_smoothed(&f.clone().add_constant(1.5).unwrap(), xi, 0.25, 1.0, None).unwrap();
        for (wa, wb) in a.weights.iter().flatten().zip(b.weights.iter().flatten()) {
            if wa.is_finite() {
                assert!((wb / wa - (xi * 1.5).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn masked_edges_are_absent() {
        let grid = GridSpec::centered(6, 6, 1.0).unwrap();
        let mask: Vec<bool> = (0..grid.len()).map(|v| grid.coords(v).0 < 3).collect();
        let g = MetricGraph::from_smoothed(&FieldGrid::zeros(grid), 0.5, 1.0, 2.0, Some(mask)).unwrap();
        assert!(g.weight(grid.index(2, 1), grid.index(3, 1)).is_infinite());
        assert!((g.weight(grid.index(1, 1), grid.index(2, 1)) - 0.5).abs() < 1e-15);
        assert!(MetricGraph::from_smoothed(&FieldGrid::zeros(grid), 0.5, 1.0, 0.0, None).is_err());
        assert!(MetricGraph::from_smoothed(&FieldGrid::zeros(grid), 0.5, 1.0, 1.0, Some(vec![false; 36])).is_err());
    }

    #[test]
    fn half_disk_window_keeps_weights() {
        let grid = GridSpec::centered(33, 17, 0.125).unwrap();
        let f = FieldGrid::from_fn(grid, |p| p.x * p.y).unwrap();
        let g = MetricGraph::from_smoothed(&f, 0.3, 0.125, 1.0, None).unwrap();
        let (sub, c0) = g.half_disk(Point::boundary(0.25), 0.5).unwrap();
        assert_eq!(sub.grid.nx, 9);
        assert_eq!(sub.grid.ny, 5);
        for v in 0..sub.len() {
            let big = g.from_window_vertex(&sub, c0, v);
            assert_eq!(g.to_window_vertex(&sub, c0, big), Some(v));
            sub.for_each_neighbor(v, |u, w| {
                assert!(sub.contains(u) && sub.contains(v));
                assert_eq!(w, g.weight(big, g.from_window_vertex(&sub, c0, u)));
            });
        }
    }
}
