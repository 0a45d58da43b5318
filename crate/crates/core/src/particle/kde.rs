use rayon::prelude::*;

use super::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

/// Gaussian kernel density estimate on the torus.
///
/// Particles are wrapped and deposited on the nodes by linear binning, then
/// smoothed by a normalized, wrapped Gaussian stencil along each axis. Both
/// stages preserve mass exactly.
pub fn empirical_density(ens: &ParticleEnsemble, grid: &Grid, bandwidth: f64) -> Result<Field> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if grid.dim() != ens.dim() {
        return Err(Error::InvalidInput(format!(
            "grid is {}-dimensional, ensemble is {}-dimensional",
            grid.dim(),
            ens.dim()
        )));
    }
    let mut values = deposit(ens, grid);
    let scale = 1.0 / (ens.len() as f64 * grid.cell_volume());
    values.iter_mut().for_each(|v| *v *= scale);
    let stencil = gaussian_stencil(bandwidth, grid.spacing(), grid.points_per_axis());
    for axis in 0..grid.dim() {
        values = smooth_axis(&values, grid, axis, &stencil);
    }
    Field::new(*grid, values)
}

/// Linear-binning counts; one partial grid per shard, merged by summation.
fn deposit(ens: &ParticleEnsemble, grid: &Grid) -> Vec<f64> {
    let d = grid.dim();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let x0 = grid.coordinate(0);
    let chunk = ens.shard_len() * d;
    ens.positions()
        .par_chunks(chunk)
        .map(|block| {
            let mut acc = vec![0.0; grid.len()];
            for p in block.chunks(d) {
                let mut base = [0usize; 3];
                let mut frac = [0.0; 3];
                for a in 0..d {
                    let s = (grid.wrap(p[a]) - x0) / h;
                    let f = s.floor();
                    base[a] = (f as i64).rem_euclid(n as i64) as usize;
                    frac[a] = s - f;
                }
                for corner in 0..(1usize << d) {
                    let mut w = 1.0;
                    let mut idx = 0;
                    for a in 0..d {
                        let up = (corner >> a) & 1 == 1;
                        w *= if up { frac[a] } else { 1.0 - frac[a] };
                        idx += ((base[a] + up as usize) % n) * grid.stride(a);
                    }
                    acc[idx] += w;
                }
            }
            acc
        })
        .reduce(
            || vec![0.0; grid.len()],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Weights at offsets `-w..=w`, summing to one.
fn gaussian_stencil(bandwidth: f64, h: f64, n: usize) -> Vec<f64> {
    let w = ((6.0 * bandwidth / h).ceil() as usize).min(4 * n);
    let mut weights: Vec<f64> = (0..=2 * w)
        .map(|j| {
            let x = (j as f64 - w as f64) * h / bandwidth;
            (-0.5 * x * x).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);
    weights
}

fn smooth_axis(values: &[f64], grid: &Grid, axis: usize, stencil: &[f64]) -> Vec<f64> {
    if stencil.len() == 1 {
        return values.to_vec();
    }
    let n = grid.points_per_axis();
    let stride = grid.stride(axis);
    let w = (stencil.len() / 2) as i64;
    (0..values.len())
        .into_par_iter()
        .map(|i| {
            let pos = (i / stride) % n;
            let base = i - pos * stride;
            stencil
                .iter()
                .enumerate()
                .map(|(j, wt)| {
                    let q = (pos as i64 + j as i64 - w).rem_euclid(n as i64) as usize;
                    wt * values[base + q * stride]
                })
                .sum()
        })
        .collect()
}

/// Silverman's rule `0.9 min(σ, IQR/1.34) N^{-1/5}` per axis, averaged over
/// the axes and floored at one grid spacing.
pub fn silverman_bandwidth(ens: &ParticleEnsemble, spacing: f64) -> f64 {
    let n = ens.len() as f64;
    let per_axis: f64 = (0..ens.dim())
        .map(|a| {
            let mut xs = ens.axis(a);
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            xs.sort_by(f64::total_cmp);
            let iqr = quantile(&xs, 0.75) - quantile(&xs, 0.25);
            let spread = if iqr > 0.0 { var.sqrt().min(iqr / 1.34) } else { var.sqrt() };
            0.9 * spread * n.powf(-0.2)
        })
        .sum::<f64>()
        / ens.dim() as f64;
    per_axis.max(spacing)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
