//! Large-lattice sampling through the discrete Gaussian free field on a torus.
//!
//! A whole-plane discrete field with covariance `2π(−Δ)⁻¹` has increments
//! `−log|v−w|` up to lattice corrections. Reflecting it across the boundary row,
//! `h(x, y) = (g(x, y) + g(x, −y))/√2`, gives covariance `−log|v−w| − log|v−w̄|`
//! up to an additive constant, and subtracting the unit semicircle average
//! turns that into the free-boundary kernel.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::FieldGrid;
use super::FieldSource;
use crate::error::{Error, Result};
use crate::geometry::GridSpec;

/// Memory budget for the torus, in complex entries.
const TORUS_LIMIT: usize = 1 << 24;

pub struct SpectralSampler {
    grid: GridSpec,
    tx: usize,
    ty: usize,
    /// `sqrt(2π/μ_k)` per torus mode, zero at the constant mode.
    amplitude: Vec<f64>,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSampler").field("grid", &self.grid).field("torus", &(self.tx, self.ty)).finish()
    }
}

impl SpectralSampler {
    pub fn new(grid: GridSpec) -> Result<Self> {
        let tx = (2 * grid.nx).next_power_of_two();
        let ty = (4 * grid.ny).next_power_of_two();
        if tx.checked_mul(ty).is_none_or(|n| n > TORUS_LIMIT) {
            return Err(Error::param("grid", format!("{}x{} exceeds the sampler memory budget", grid.nx, grid.ny)));
        }
        let mut amplitude = vec![0.0; tx * ty];
        for k2 in 0..ty {
            let sy = (PI * k2 as f64 / ty as f64).sin();
            for k1 in 0..tx {
                let sx = (PI * k1 as f64 / tx as f64).sin();
                let mu = 4.0 * (sx * sx + sy * sy);
                if k1 + k2 > 0 {
                    amplitude[k2 * tx + k1] = (TAU / mu).sqrt();
                }
            }
        }
        let mut planner = FftPlanner::new();
        Ok(SpectralSampler {
            grid,
            tx,
            ty,
            amplitude,
            row_fft: planner.plan_fft_inverse(tx),
            col_fft: planner.plan_fft_inverse(ty),
        })
    }

    /// Torus dimensions.
    pub fn torus(&self) -> (usize, usize) {
        (self.tx, self.ty)
    }

    /// The whole-plane field on the torus, row-major.
    fn torus_field(&self, seed: u64) -> Vec<f64> {
        let (tx, ty) = (self.tx, self.ty);
        let n = (tx * ty) as f64;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        // Fourier coefficients of complex white noise, E|ŵ_k|² = 2N.
        let root_n = n.sqrt();
        let mut buf: Vec<Complex64> = self
            .amplitude
            .iter()
            .map(|&a| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * (a * root_n)
            })
            .collect();
        for row in buf.chunks_exact_mut(tx) {
            self.row_fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); ty];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.col_fft.get_inplace_scratch_len()];
        for i in 0..tx {
            for j in 0..ty {
                col[j] = buf[j * tx + i];
            }
            self.col_fft.process_with_scratch(&mut col, &mut scratch);
            for j in 0..ty {
                buf[j * tx + i] = col[j];
            }
        }
        buf.iter().map(|c| c.re / n).collect()
    }
}

impl FieldSource for SpectralSampler {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// One draw of the reflected field. Not normalized.
    fn sample(&self, seed: u64) -> Result<FieldGrid> {
        let g = self.torus_field(seed);
        let (nx, ny, tx, ty) = (self.grid.nx, self.grid.ny, self.tx, self.ty);
        let mut values = vec![0.0; nx * ny];
        for j in 0..ny {
            let mirror = (ty - j) % ty;
            for i in 0..nx {
                values[j * nx + i] = (g[j * tx + i] + g[mirror * tx + i]) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        FieldGrid::new(self.grid, values, seed)
    }

    fn is_approximate(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_is_large_enough() {
        let s = SpectralSampler::new(GridSpec::centered(100, 40, 0.1).unwrap()).unwrap();
        assert_eq!(s.torus(), (256, 256));
        assert!(SpectralSampler::new(GridSpec::centered(8192, 4096, 0.1).unwrap()).is_err());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let s = SpectralSampler::new(GridSpec::centered(32, 16, 0.1).unwrap()).unwrap();
        let a = s.sample(5).unwrap();
        assert_eq!(a, s.sample(5).unwrap());
        assert_ne!(a.values(), s.sample(6).unwrap().values());
        assert!(s.is_approximate());
    }

    #[test]
    fn lattice_increment_variance_is_logarithmic() {
        // Var(g(x) − g(x+k)) for the whole-plane field grows like 2·log k.
        let s = SpectralSampler::new(GridSpec::centered(64, 32, 1.0).unwrap()).unwrap();
        let (tx, _) = s.torus();
        let draws = 200;
        let mut v4 = 0.0;
        let mut v16 = 0.0;
        for seed in 0..draws {
            let g = s.torus_field(seed);
            for row in (0..128).step_by(16) {
                let b = row * tx + 40;
                v4 += (g[b] - g[b + 4]).powi(2);
                v16 += (g[b] - g[b + 16]).powi(2);
            }
        }
        let ratio = (v16 - v4) / (8.0 * draws as f64) / (2.0 * 4.0f64.ln());
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
    }
}
