//! Free-boundary Gaussian free field on the upper half-plane.

mod exact;
mod field;
mod kernel;
mod spectral;

pub use exact::{covariance_matrix, factorize, sample_exact, ExactGridSampler, ExactSampler, EXACT_GRID_LIMIT};
pub use field::FieldGrid;
pub use kernel::{green, CircleProbe, KernelQuadrature, ProbeSet};
pub use spectral::SpectralSampler;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::GridSpec;

/// Anything that draws fields on a fixed lattice from a seed.
pub trait FieldSource: Send + Sync {
    fn grid(&self) -> &GridSpec;

    /// One unnormalized draw, a pure function of `seed`.
    fn sample(&self, seed: u64) -> Result<FieldGrid>;

    /// Whether the covariance is only approximately the target kernel.
    fn is_approximate(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Exact,
    Spectral,
}

/// Builds the sampler for `grid`.
pub fn sampler(grid: GridSpec, kind: SamplerKind) -> Result<Box<dyn FieldSource>> {
    Ok(match kind {
        SamplerKind::Exact => Box::new(ExactGridSampler::new(grid)?),
        SamplerKind::Spectral => Box::new(SpectralSampler::new(grid)?),
    })
}

/// One draw on `grid` with the chosen method, not normalized.
pub fn sample_grid(grid: GridSpec, seed: u64, kind: SamplerKind) -> Result<FieldGrid> {
    sampler(grid, kind)?.sample(seed)
}
