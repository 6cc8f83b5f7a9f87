//! The free-boundary Green kernel and its integrals against (semi)circle probes.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// `G(v,w) = log(|v|₊²|w|₊²) − log|v−w| − log|v−w̄|` with `|v|₊ = max(|v|, 1)`.
pub fn green(v: Point, w: Point) -> Result<f64> {
    if v == w {
        return Err(Error::DiagonalSingularity);
    }
    let a = 2.0 * v.norm().max(1.0).ln() + 2.0 * w.norm().max(1.0).ln();
    Ok(a - v.dist(w).ln() - v.dist(w.conj()).ln())
}

/// The uniform probability measure on `𝕋_r(c) ∩ ℍ̄`. A probe is either a
/// boundary semicircle (`c.y == 0`) or a full circle in the bulk (`c.y ≥ r`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleProbe {
    pub center: Point,
    pub radius: f64,
}

impl CircleProbe {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::param("radius", format!("{radius} must be positive")));
        }
        if !(center.x.is_finite() && center.y.is_finite()) || center.y < 0.0 {
            return Err(Error::Domain(format!("probe center ({}, {}) is not in the closed half-plane", center.x, center.y)));
        }
        if center.y > 0.0 && center.y < radius {
            return Err(Error::Domain(format!(
                "circle of radius {radius} about ({}, {}) crosses the boundary",
                center.x, center.y
            )));
        }
        Ok(CircleProbe { center, radius })
    }

    pub fn semicircle(x: f64, radius: f64) -> Result<Self> {
        CircleProbe::new(Point::boundary(x), radius)
    }

    /// The unit semicircle about the origin, used for normalization.
    pub fn unit() -> Self {
        CircleProbe { center: Point::boundary(0.0), radius: 1.0 }
    }

    pub fn is_boundary(&self) -> bool {
        self.center.y == 0.0
    }

    fn arc(&self) -> (f64, f64) {
        if self.is_boundary() {
            (0.0, PI)
        } else {
            (0.0, TAU)
        }
    }

    fn at(&self, theta: f64) -> Point {
        Point::new(
            self.center.x + self.radius * theta.cos(),
            self.center.y + self.radius * theta.sin(),
        )
    }

    /// `Φ(w) = ∫ (log|v−w| + log|v−w̄|) dρ(v)`, in closed form by harmonicity.
    fn potential(&self, w: Point) -> f64 {
        let c = self.center;
        if self.is_boundary() {
            2.0 * c.dist(w).max(self.radius).ln()
        } else {
            c.dist(w).max(self.radius).ln() + c.dist(w.conj()).ln()
        }
    }
}

/// A finite family of pairwise distinct probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    probes: Vec<CircleProbe>,
}

impl ProbeSet {
    pub fn new(probes: Vec<CircleProbe>) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::param("probes", "probe set is empty"));
        }
        for (k, p) in probes.iter().enumerate() {
            if probes[..k].contains(p) {
                return Err(Error::param("probes", format!("probe {k} duplicates an earlier probe")));
            }
        }
        Ok(ProbeSet { probes })
    }

    /// Circle averages of a common radius about the given points. Boundary points
    /// get semicircles.
    pub fn around(points: &[Point], radius: f64) -> Result<Self> {
        ProbeSet::new(points.iter().map(|&p| CircleProbe::new(p, radius)).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn probes(&self) -> &[CircleProbe] {
        &self.probes
    }
}

/// Angles in `[lo, hi]` at which `|c + r e^{iθ} − d0| = s` on the probe arc.
fn crossing_angles(p: &CircleProbe, d0: Point, s: f64, out: &mut Vec<f64>) {
    let d = Point::new(p.center.x - d0.x, p.center.y - d0.y);
    let dn = d.norm();
    let r = p.radius;
    if dn == 0.0 {
        return;
    }
    let c = (s * s - dn * dn - r * r) / (2.0 * dn * r);
    if !(-1.0..=1.0).contains(&c) {
        return;
    }
    let phi = d.y.atan2(d.x);
    let delta = c.acos();
    let (lo, hi) = p.arc();
    for t in [phi + delta, phi - delta] {
        let t = t.rem_euclid(TAU);
        if t > lo && t < hi {
            out.push(t);
        }
    }
}

/// Integrals of the kernel against probes by composite Gauss-Legendre
/// quadrature, split at the kinks of the integrands.
#[derive(Clone, Debug)]
pub struct KernelQuadrature {
    rule: GaussLegendre,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        KernelQuadrature::new(48)
    }
}

impl KernelQuadrature {
    pub fn new(nodes_per_segment: usize) -> Self {
        KernelQuadrature {
            rule: GaussLegendre::new(NonZeroUsize::new(nodes_per_segment.max(2)).expect("nonzero")),
        }
    }

    /// Average of `f` over the probe arc, split at the given angles.
    fn arc_average(&self, p: &CircleProbe, mut cuts: Vec<f64>, f: impl Fn(Point) -> f64) -> f64 {
        let (lo, hi) = p.arc();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += self.rule.integrate(w[0], w[1], |t| f(p.at(t)));
            }
        }
        total / (hi - lo)
    }

    /// `A(p) = ∫ 2 log|v|₊ dρ_p(v)`.
    pub fn radial_term(&self, p: &CircleProbe) -> f64 {
        let cn = p.center.norm();
        if cn + p.radius <= 1.0 {
            return 0.0;
        }
        if cn - p.radius >= 1.0 {
            return 2.0 * cn.ln();
        }
        let mut cuts = Vec::new();
        crossing_angles(p, Point::new(0.0, 0.0), 1.0, &mut cuts);
        self.arc_average(p, cuts, |v| 2.0 * v.norm().max(1.0).ln())
    }

    /// `L(p,q) = ∫∫ (log|v−w| + log|v−w̄|) dρ_p(v) dρ_q(w)`.
    pub fn log_term(&self, p: &CircleProbe, q: &CircleProbe) -> f64 {
        if p == q {
            return if p.is_boundary() {
                2.0 * p.radius.ln()
            } else {
                p.radius.ln() + (2.0 * p.center.y).ln()
            };
        }
        if p.center.dist(q.center) >= p.radius + q.radius {
            return p.potential(q.center);
        }
        let mut cuts = Vec::new();
        crossing_angles(q, p.center, p.radius, &mut cuts);
        self.arc_average(q, cuts, |w| p.potential(w))
    }

    /// `∫∫ G dρ_p dρ_q`, the covariance of the two probe averages of the field.
    pub fn covariance(&self, p: &CircleProbe, q: &CircleProbe) -> f64 {
        self.radial_term(p) + self.radial_term(q) - self.log_term(p, q)
    }

    /// The covariance conditioned on a vanishing average over the unit semicircle:
    /// `C(p,q) = K(p,q) − K(p,o) − K(q,o) + K(o,o)`.
    pub fn normalized_covariance(&self, p: &CircleProbe, q: &CircleProbe) -> f64 {
        let o = CircleProbe::unit();
        self.covariance(p, q) - self.covariance(p, &o) - self.covariance(q, &o) + self.covariance(&o, &o)
    }

    /// `V(x)`, the variance of the unit semicircle average about `x`.
    pub fn unit_variance(&self, x: f64) -> f64 {
        let p = CircleProbe { center: Point::boundary(x), radius: 1.0 };
        self.normalized_covariance(&p, &p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_values() {
        let g = green(Point::new(0.0, 1.0), Point::new(0.0, 2.0)).unwrap();
        assert!((g - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let g = green(Point::boundary(1.0), Point::boundary(2.0)).unwrap();
        assert!((g - 4.0f64.ln()).abs() < 1e-12);
        assert!(matches!(green(Point::new(0.3, 0.2), Point::new(0.3, 0.2)), Err(Error::DiagonalSingularity)));
    }

    #[test]
    fn green_is_symmetric() {
        let pts = [Point::new(0.1, 0.4), Point::boundary(-0.7), Point::new(2.5, 1.1), Point::new(-0.3, 3.0)];
        for &v in &pts {
            for &w in &pts {
                if v != w {
                    assert_eq!(green(v, w).unwrap(), green(w, v).unwrap());
                }
            }
        }
    }

    /// Brute-force double quadrature of the kernel on two separated probes.
    fn brute(p: &CircleProbe, q: &CircleProbe, m: usize) -> f64 {
        let (plo, phi) = p.arc();
        let (qlo, qhi) = q.arc();
        let mut s = 0.0;
        for a in 0..m {
            let v = p.at(plo + (phi - plo) * (a as f64 + 0.5) / m as f64);
            for b in 0..m {
                let w = q.at(qlo + (qhi - qlo) * (b as f64 + 0.5) / m as f64);
                s += green(v, w).unwrap();
            }
        }
        s / (m * m) as f64
    }

    #[test]
    fn covariance_matches_brute_force_when_separated() {
        let k = KernelQuadrature::default();
        let cases = [
            (CircleProbe::new(Point::new(0.0, 1.0), 0.3).unwrap(), CircleProbe::semicircle(1.5, 0.4).unwrap()),
            (CircleProbe::new(Point::new(0.2, 2.0), 0.5).unwrap(), CircleProbe::new(Point::new(-0.4, 0.6), 0.5).unwrap()),
            (CircleProbe::semicircle(-0.8, 0.5).unwrap(), CircleProbe::semicircle(0.9, 0.7).unwrap()),
        ];
        for (p, q) in cases {
            let exact = k.covariance(&p, &q);
            let approx = brute(&p, &q, 400);
            assert!((exact - approx).abs() < 1e-4, "{exact} vs {approx}");
            assert!((exact - k.covariance(&q, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_quadrature_is_symmetric() {
        let k = KernelQuadrature::default();
        let pairs = [
            (CircleProbe::semicircle(0.0, 0.5).unwrap(), CircleProbe::semicircle(0.3, 0.4).unwrap()),
            (CircleProbe::new(Point::new(0.1, 1.0), 0.6).unwrap(), CircleProbe::semicircle(0.5, 0.5).unwrap()),
            (CircleProbe::new(Point::new(0.0, 1.0), 0.6).unwrap(), CircleProbe::new(Point::new(0.3, 1.2), 0.5).unwrap()),
        ];
        for (p, q) in pairs {
            let a = k.log_term(&p, &q);
            let b = k.log_term(&q, &p);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn unit_semicircle_average_is_pinned() {
        let k = KernelQuadrature::default();
        let o = CircleProbe::unit();
        for p in [
            CircleProbe::semicircle(0.4, 0.9).unwrap(),
            CircleProbe::new(Point::new(0.3, 1.0), 0.5).unwrap(),
            CircleProbe::semicircle(3.0, 0.2).unwrap(),
        ] {
            assert!(k.covariance(&p, &o).abs() < 1e-10);
        }
        assert_eq!(k.covariance(&o, &o), 0.0);
    }

    #[test]
    fn concentric_semicircles_have_brownian_increments() {
        let k = KernelQuadrature::default();
        let o = CircleProbe::unit();
        for t in [0.5f64, 1.0, 1.5] {
            let p = CircleProbe::semicircle(0.0, (-t).exp()).unwrap();
            let var = k.normalized_covariance(&p, &p) - 2.0 * k.normalized_covariance(&p, &o)
                + k.normalized_covariance(&o, &o);
            assert!((var - 2.0 * t).abs() < 1e-12);
        }
    }
}
