//! LFPP metric: mollification, weight graphs and shortest paths.

mod graph;
mod mollify;
mod paths;

pub use graph::{build_graph, MetricGraph};
pub use mollify::mollify;
pub use paths::{distance, point_distance, shortest_paths, GeodesicTree, NO_PRED};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::gff::FieldSource;
use crate::params::LqgParams;
use crate::seeds::trial_seed;

/// Median over `trials` fields of the raw (`a_ε = 1`) distance between the
/// bulk nodes nearest `(−½, ½)` and `(½, ½)`. Using the returned value as
/// `a_ε` makes the median distance between them 1.
pub fn calibrate_a_eps(
    params: &LqgParams,
    epsilon: f64,
    source: &dyn FieldSource,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials < 50 {
        return Err(Error::param("trials", format!("calibration needs at least 50 trials, got {trials}")));
    }
    let grid = *source.grid();
    let a = grid.nearest_vertex(Point::new(-0.5, 0.5))?;
    let b = grid.nearest_vertex(Point::new(0.5, 0.5))?;
    let mut samples = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let field = source.sample(trial_seed(seed, k))?.normalize()?;
            let g = build_graph(&field, params, epsilon, 1.0, None)?;
            point_distance(&g, a, b)
        })
        .collect::<Result<Vec<f64>>>()?;
    samples.sort_by(f64::total_cmp);
    let m = samples.len();
    let median = if m % 2 == 1 { samples[m / 2] } else { 0.5 * (samples[m / 2 - 1] + samples[m / 2]) };
    if !(median.is_finite() && median > 0.0) {
        return Err(Error::Numerical(format!("degenerate calibration samples (median {median})")));
    }
    Ok(median)
}
