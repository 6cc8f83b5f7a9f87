//! Heat-kernel smoothing with a reflecting boundary row.

use crate::error::{Error, Result};
use crate::gff::FieldGrid;

/// Tap weights `exp(−d²/2σ²)` for `|d| ≤ R`, `R = ⌈4σ⌉`.
pub(crate) fn taps(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil() as usize;
    (0..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect()
}

/// Row weights for output row `j`: the kernel reflected across row 0,
/// truncated at the grid and normalized to unit mass.
pub(crate) fn reflected_weights(g: &[f64], j: usize, n: usize) -> Vec<(usize, f64)> {
    let r = g.len() - 1;
    let tap = |d: usize| if d <= r { g[d] } else { 0.0 };
    // Row jp > 0 also contributes through its mirror image at −jp.
    let w: Vec<(usize, f64)> = (j.saturating_sub(r)..=(j + r).min(n - 1))
        .map(|jp| (jp, tap(j.abs_diff(jp)) + if jp > 0 { tap(j + jp) } else { 0.0 }))
        .collect();
    let total: f64 = w.iter().map(|e| e.1).sum();
    w.into_iter().map(|(k, x)| (k, x / total)).collect()
}

fn truncated_weights(g: &[f64], i: usize, n: usize) -> Vec<(usize, f64)> {
    let r = g.len() - 1;
    let lo = i.saturating_sub(r);
    let hi = (i + r).min(n - 1);
    let total: f64 = (lo..=hi).map(|k| g[i.abs_diff(k)]).sum();
    (lo..=hi).map(|k| (k, g[i.abs_diff(k)] / total)).collect()
}

/// Gaussian blur with standard deviation `ε/√2`. Reflecting across the
/// boundary row keeps the free boundary condition; at the other edges the
/// kernel is truncated and renormalized.
pub fn mollify(field: &FieldGrid, epsilon: f64) -> Result<FieldGrid> {
    let grid = field.grid;
    if !(epsilon.is_finite() && epsilon >= grid.spacing * (1.0 - 1e-12)) {
        return Err(Error::Resolution(format!(
            "mollification scale {epsilon} is below the lattice spacing {}",
            grid.spacing
        )));
    }
    let sigma = epsilon / (std::f64::consts::SQRT_2 * grid.spacing);
    let g = taps(sigma);
    let (nx, ny) = (grid.nx, grid.ny);
    let src = field.values();

    let xw: Vec<Vec<(usize, f64)>> = (0..nx).map(|i| truncated_weights(&g, i, nx)).collect();
    let mut tmp = vec![0.0; nx * ny];
    for j in 0..ny {
        let row = &src[j * nx..(j + 1) * nx];
        let out = &mut tmp[j * nx..(j + 1) * nx];
        for (i, ws) in xw.iter().enumerate() {
            out[i] = ws.iter().map(|&(k, w)| w * row[k]).sum();
        }
    }

    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let dst = &mut out[j * nx..(j + 1) * nx];
        for (k, w) in reflected_weights(&g, j, ny) {
            let row = &tmp[k * nx..(k + 1) * nx];
            for (d, s) in dst.iter_mut().zip(row) {
                *d += w * s;
            }
        }
    }
    Ok(field.with_values(out))
}
