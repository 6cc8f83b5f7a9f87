//! Sampled fields on a half-plane lattice.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Point};

const MAGIC: &[u8; 4] = b"LQGF";
const VERSION: u32 = 1;

/// A real field on the lattice. Values are stored row-major with the boundary row first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub grid: GridSpec,
    values: Vec<f64>,
    pub seed: u64,
    normalized: bool,
}

impl FieldGrid {
    pub fn new(grid: GridSpec, values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} values for a {}x{} grid, got {}", grid.len(), grid.nx, grid.ny, values.len()),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("field value at vertex {k} is not finite")));
        }
        Ok(FieldGrid { grid, values, seed, normalized: false })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        FieldGrid { grid, values: vec![0.0; grid.len()], seed: 0, normalized: false }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> f64) -> Result<Self> {
        FieldGrid::new(grid, (0..grid.len()).map(|v| f(grid.position(v))).collect(), 0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Bilinear interpolation. `p` must lie inside the lattice box.
    pub fn interpolate(&self, p: Point) -> f64 {
        let g = &self.grid;
        let fx = ((p.x - g.origin_x) / g.spacing).clamp(0.0, (g.nx - 1) as f64);
        let fy = (p.y / g.spacing).clamp(0.0, (g.ny - 1) as f64);
        let i = (fx.floor() as usize).min(g.nx - 2);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let row0 = j * g.nx + i;
        let row1 = row0 + g.nx;
        let v = &self.values;
        (1.0 - ty) * ((1.0 - tx) * v[row0] + tx * v[row0 + 1]) + ty * ((1.0 - tx) * v[row1] + tx * v[row1 + 1])
    }

    /// Average over `𝕋_r(center) ∩ ℍ̄`: a semicircle when `center` is on the
    /// boundary, a full circle when `center.y ≥ r`.
    pub fn circle_average(&self, center: Point, r: f64) -> Result<f64> {
        let g = &self.grid;
        if !(r.is_finite() && r >= 2.0 * g.spacing * (1.0 - 1e-12)) {
            return Err(Error::Resolution(format!("radius {r} is below two lattice spacings ({})", 2.0 * g.spacing)));
        }
        let span = if center.y == 0.0 {
            PI
        } else if center.y >= r {
            TAU
        } else {
            return Err(Error::Domain(format!("circle of radius {r} about ({}, {}) crosses the boundary", center.x, center.y)));
        };
        if !g.covers_disk(center, r) {
            return Err(Error::Domain(format!("circle of radius {r} about ({}, {}) leaves the grid", center.x, center.y)));
        }
        let m = ((2.0 * span * r / g.spacing).ceil() as usize).max(64);
        let step = span / m as f64;
        let total: f64 = (0..m)
            .map(|k| {
                let t = step * (k as f64 + 0.5);
                self.interpolate(Point::new(center.x + r * t.cos(), center.y + r * t.sin()))
            })
            .sum();
        Ok(total / m as f64)
    }

    /// Shifts the field so that its average over the unit semicircle about 0 vanishes.
    pub fn normalize(mut self) -> Result<Self> {
        let c = self.circle_average(Point::boundary(0.0), 1.0)?;
        for v in &mut self.values {
            *v -= c;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Pointwise sum with `f`. Clears the normalization flag.
    pub fn add_function(mut self, f: impl Fn(Point) -> f64) -> Result<Self> {
        for v in 0..self.values.len() {
            let d = f(self.grid.position(v));
            if !d.is_finite() {
                return Err(Error::Numerical(format!("added function is not finite at vertex {v}")));
            }
            self.values[v] += d;
        }
        self.normalized = false;
        Ok(self)
    }

    pub fn add_constant(self, c: f64) -> Result<Self> {
        self.add_function(|_| c)
    }

    pub fn map_values(mut self, f: impl Fn(f64) -> f64) -> Result<Self> {
        for v in &mut self.values {
            *v = f(*v);
        }
        FieldGrid::new(self.grid, self.values, self.seed)
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        FieldGrid { grid: self.grid, values, seed: self.seed, normalized: false }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let g = &self.grid;
        let mut buf = Vec::with_capacity(49 + 8 * self.values.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(g.nx as u64).to_le_bytes());
        buf.extend_from_slice(&(g.ny as u64).to_le_bytes());
        buf.extend_from_slice(&g.spacing.to_le_bytes());
        buf.extend_from_slice(&g.origin_x.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        buf.push(self.normalized as u8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("not a field file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Format(format!("unsupported field file version {version}")));
        }
        let nx = cur.u64()? as usize;
        let ny = cur.u64()? as usize;
        let spacing = cur.f64()?;
        let origin_x = cur.f64()?;
        let seed = cur.u64()?;
        let normalized = match cur.take(1)?[0] {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("bad normalization flag {b}"))),
        };
        let grid = GridSpec::new(nx, ny, spacing, origin_x).map_err(|e| Error::Format(e.to_string()))?;
        if bytes.len() - cur.pos != 8 * grid.len() {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                8 * grid.len(),
                bytes.len() - cur.pos
            )));
        }
        let values = (0..grid.len()).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let mut field = FieldGrid::new(grid, values, seed)?;
        field.normalized = normalized;
        Ok(field)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Format("field file is truncated".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::centered(129, 65, 1.0 / 32.0).unwrap()
    }

    fn wavy() -> FieldGrid {
        FieldGrid::from_fn(grid(), |p| (3.0 * p.x).sin() + p.y * p.y - 0.3 * p.x).unwrap()
    }

    #[test]
    fn zero_and_constant_fields() {
        let z = FieldGrid::zeros(grid());
        assert_eq!(z.circle_average(Point::boundary(0.2), 0.5).unwrap(), 0.0);
        let c = z.add_constant(1.75).unwrap();
        let avg = c.circle_average(Point::new(0.0, 0.8), 0.4).unwrap();
        assert!((avg - 1.75).abs() < 1e-14);
        let n = c.normalize().unwrap();
        assert!(n.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn normalization_is_idempotent() {
        let once = wavy().normalize().unwrap();
        assert!(once.is_normalized());
        assert!(once.circle_average(Point::boundary(0.0), 1.0).unwrap().abs() < 1e-9);
        let twice = once.clone().normalize().unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let shifted = once.clone().add_constant(-2.5).unwrap();
        assert!(!shifted.is_normalized());
        let back = shifted.normalize().unwrap();
        for (a, b) in once.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_average_is_linear() {
        let f = wavy();
        let g = FieldGrid::from_fn(grid(), |p| (p.x * p.y).cos()).unwrap();
        let h = FieldGrid::new(grid(), f.values().iter().zip(g.values()).map(|(a, b)| 2.0 * a - 0.5 * b).collect(), 0).unwrap();
        for (c, r) in [(Point::boundary(0.1), 0.7), (Point::new(-0.2, 0.9), 0.3)] {
            let lhs = h.circle_average(c, r).unwrap();
            let rhs = 2.0 * f.circle_average(c, r).unwrap() - 0.5 * g.circle_average(c, r).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_function_has_mean_value() {
        let f = FieldGrid::from_fn(grid(), |p| p.x * p.x - p.y * p.y + 0.5 * p.x).unwrap();
        let avg = f.circle_average(Point::new(0.3, 0.8), 0.5).unwrap();
        assert!((avg - (0.09 - 0.64 + 0.15)).abs() < 1e-3);
    }

    #[test]
    fn bad_circles_are_rejected() {
        let f = FieldGrid::zeros(grid());
        assert!(matches!(f.circle_average(Point::new(0.0, 0.2), 0.5), Err(Error::Domain(_))));
        assert!(matches!(f.circle_average(Point::boundary(1.9), 0.5), Err(Error::Domain(_))));
        assert!(matches!(f.circle_average(Point::boundary(0.0), 0.04), Err(Error::Resolution(_))));
    }

    #[test]
    fn file_round_trip() {
        let f = wavy().normalize().unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"LQGF");
        assert_eq!(buf.len(), 49 + 8 * f.grid.len());
        let g = FieldGrid::read_from(buf.as_slice()).unwrap();
        assert_eq!(f, g);
        assert!(FieldGrid::read_from(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(FieldGrid::read_from(bad.as_slice()), Err(Error::Format(_))));
    }
}
