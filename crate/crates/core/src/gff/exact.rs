//! Exact Gaussian sampling by dense factorization of the probe covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::field::FieldGrid;
use super::kernel::{CircleProbe, KernelQuadrature, ProbeSet};
use super::FieldSource;
use crate::error::{Error, Result};
use crate::geometry::GridSpec;

/// Largest vertex count the dense grid sampler accepts.
pub const EXACT_GRID_LIMIT: usize = 4096;

/// The normalized covariance matrix of a probe set.
pub fn covariance_matrix(probes: &ProbeSet, quad: &KernelQuadrature) -> DMatrix<f64> {
    let ps = probes.probes();
    let n = ps.len();
    let o = CircleProbe::unit();
    let radial: Vec<f64> = ps.iter().map(|p| quad.radial_term(p)).collect();
    let pinned: Vec<f64> = ps.iter().map(|p| quad.covariance(p, &o)).collect();
    let base = quad.covariance(&o, &o);
    let mut c = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let k = radial[a] + radial[b] - quad.log_term(&ps[a], &ps[b]);
            let v = k - pinned[a] - pinned[b] + base;
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    c
}

/// Lower factor `F` with `F Fᵀ ≈ C`. Tries Cholesky with escalating diagonal
/// jitter, then falls back to an eigendecomposition with small negative
/// eigenvalues clamped to zero.
pub fn factorize(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.nrows();
    let scale = (0..n).map(|k| c[(k, k)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for jitter in [0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10] {
        let mut m = c.clone();
        for k in 0..n {
            m[(k, k)] += jitter * scale;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.l());
        }
    }
    let eig = SymmetricEigen::new(c.clone());
    let min = eig.eigenvalues.min();
    if min < -1e-8 * scale {
        return Err(Error::Numerical(format!(
            "covariance is not positive semidefinite: smallest eigenvalue {min:.3e} against diagonal scale {scale:.3e}"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Joint sampler for the probe averages `(h, ρ_k)` of the normalized field.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    probes: ProbeSet,
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl ExactSampler {
    pub fn new(probes: ProbeSet) -> Result<Self> {
        Self::with_quadrature(probes, &KernelQuadrature::default())
    }

    pub fn with_quadrature(probes: ProbeSet, quad: &KernelQuadrature) -> Result<Self> {
        if probes.len() > EXACT_GRID_LIMIT {
            return Err(Error::param(
                "probes",
                format!("{} probes exceed the dense factorization limit {EXACT_GRID_LIMIT}", probes.len()),
            ));
        }
        let covariance = covariance_matrix(&probes, quad);
        let factor = factorize(&covariance)?;
        Ok(ExactSampler { probes, covariance, factor })
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Largest entry of `|F Fᵀ − C|`.
    pub fn reconstruction_error(&self) -> f64 {
        (&self.factor * self.factor.transpose() - &self.covariance).amax()
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.probes.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (&self.factor * z).iter().copied().collect()
    }

    pub fn sample(&self, seed: u64) -> Vec<f64> {
        self.sample_with(&mut ChaCha20Rng::seed_from_u64(seed))
    }
}

/// One exact draw of the probe averages.
pub fn sample_exact(probes: &ProbeSet, seed: u64) -> Result<Vec<f64>> {
    Ok(ExactSampler::new(probes.clone())?.sample(seed))
}

/// Exact sampler on a small lattice. Each node carries the circle average of
/// radius `spacing/2` about it (a semicircle on the boundary row), so the
/// nodal values form a genuine Gaussian vector with finite variances.
#[derive(Clone, Debug)]
pub struct ExactGridSampler {
    grid: GridSpec,
    inner: ExactSampler,
}

impl ExactGridSampler {
    pub fn new(grid: GridSpec) -> Result<Self> {
        if grid.len() > EXACT_GRID_LIMIT {
            return Err(Error::param(
                "grid",
                format!("exact sampling needs nx*ny <= {EXACT_GRID_LIMIT}, got {}", grid.len()),
            ));
        }
        let r = 0.5 * grid.spacing;
        let probes = (0..grid.len())
            .map(|v| CircleProbe::new(grid.position(v), r))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExactGridSampler { grid, inner: ExactSampler::new(ProbeSet::new(probes)?)? })
    }

    pub fn nodal(&self) -> &ExactSampler {
        &self.inner
    }
}

impl FieldSource for ExactGridSampler {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn sample(&self, seed: u64) -> Result<FieldGrid> {
        FieldGrid::new(self.grid, self.inner.sample(seed), seed)
    }

    fn is_approximate(&self) -> bool {
        false
    }
}
