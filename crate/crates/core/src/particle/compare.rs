use serde::{Deserialize, Serialize};

use super::{empirical_density, init_ensemble_with_streams, ParticleEnsemble, DEFAULT_SHARDS};
use crate::error::{Error, Result};
use crate::spectral::Field;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalMetrics {
    pub time: f64,
    /// `|KDE - u|_1` on the grid.
    pub l1: f64,
    /// Wasserstein-1 distance of each axis projection.
    pub w1: Vec<f64>,
    /// Share of the KDE mass in the outer band of the box.
    pub boundary_mass_fraction: f64,
}

/// Compare the ensemble with the density `u` at the ensemble's time.
pub fn marginal_comparison(u: &Field, ens: &ParticleEnsemble, bandwidth: f64) -> Result<MarginalMetrics> {
    let kde = empirical_density(ens, u.grid(), bandwidth)?;
    Ok(MarginalMetrics {
        time: ens.time(),
        l1: kde.l1_distance(u),
        w1: (0..ens.dim()).map(|a| axis_w1(u, ens, a)).collect(),
        boundary_mass_fraction: kde.boundary_mass_fraction(),
    })
}

/// `∫ |F_u - F_N|` for the projection on `axis`, with `u` uniform inside
/// each cell and the particles wrapped into the same period.
pub fn axis_w1(u: &Field, ens: &ParticleEnsemble, axis: usize) -> f64 {
    let grid = u.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let stride = grid.stride(axis);
    let mut cell_mass = vec![0.0; n];
    for (i, v) in u.values().iter().enumerate() {
        cell_mass[(i / stride) % n] += v.max(0.0);
    }
    let total: f64 = cell_mass.iter().sum();
    let lo = grid.coordinate(0) - 0.5 * h;
    let period = grid.box_length();
    let mut xs: Vec<f64> = ens
        .axis(axis)
        .into_iter()
        .map(|x| lo + (x - lo).rem_euclid(period))
        .collect();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;

    // integral of |g| for g linear from g0 to g1 over a width
    let piece = |g0: f64, g1: f64, width: f64| {
        if g0 * g1 >= 0.0 {
            0.5 * (g0.abs() + g1.abs()) * width
        } else {
            0.5 * (g0 * g0 + g1 * g1) / (g1 - g0).abs() * width
        }
    };
    let mut w1 = 0.0;
    let mut fu = 0.0;
    let mut k = 0usize;
    for (i, &mass) in cell_mass.iter().enumerate() {
        let (a, b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
        let slope = mass / total / h;
        let mut x = a;
        loop {
            let next = if k < xs.len() && xs[k] < b { xs[k] } else { b };
            let fn_ = k as f64 / m;
            let (g0, g1) = (fu + slope * (x - a) - fn_, fu + slope * (next - a) - fn_);
            w1 += piece(g0, g1, next - x);
            x = next;
            if next == b {
                break;
            }
            k += 1;
        }
        fu += mass / total;
    }
    w1
}

/// Monte-Carlo reference levels for the KDE distance at a given `N` and bandwidth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlBudget {
    pub particles: usize,
    pub bandwidth: f64,
    /// `|KDE(i.i.d. sample of u) - u|_1`, one entry per replicate.
    pub resampling_l1: Vec<f64>,
    /// `|KDE(sample a) - KDE(sample b)|_1` for independent samples of `u`.
    pub twin_l1: Vec<f64>,
    /// Mean of `resampling_l1`; the reference for a KDE compared with a density.
    pub budget: f64,
    /// Mean of `twin_l1`; the reference for two KDEs compared with each other.
    pub twin_budget: f64,
}

/// Draw `2 · replicates` independent samples of `u` of size `n` on stream ids
/// disjoint from the ones used by simulations.
pub fn control_budget(u: &Field, n: usize, bandwidth: f64, replicates: usize, seed: u64) -> Result<ControlBudget> {
    if replicates == 0 {
        return Err(Error::InvalidInput("control needs at least one replicate".into()));
    }
    let shards = DEFAULT_SHARDS as u64;
    let sample = |r: u64| -> Result<Field> {
        let ids: Vec<u64> = (0..shards).map(|k| (1 << 40) + r * shards + k).collect();
        empirical_density(&init_ensemble_with_streams(u, n, seed, &ids)?, u.grid(), bandwidth)
    };
    let mut resampling_l1 = Vec::with_capacity(replicates);
    let mut twin_l1 = Vec::with_capacity(replicates);
    for r in 0..replicates as u64 {
        let (a, b) = (sample(2 * r)?, sample(2 * r + 1)?);
        resampling_l1.push(a.l1_distance(u));
        twin_l1.push(a.l1_distance(&b));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ControlBudget {
        particles: n,
        bandwidth,
        budget: mean(&resampling_l1),
        twin_budget: mean(&twin_l1),
        resampling_l1,
        twin_l1,
    })
}

/// `time,l1,w1_axis0,...`
pub fn metrics_csv(metrics: &[MarginalMetrics]) -> String {
    let d = metrics.first().map_or(1, |m| m.w1.len());
    let mut out = String::from("time,l1");
    for a in 0..d {
        out.push_str(&format!(",w1_axis{a}"));
    }
    out.push_str(",boundary_mass_fraction\n");
    for m in metrics {
        out.push_str(&format!("{},{}", m.time, m.l1));
        for w in &m.w1 {
            out.push_str(&format!(",{w}"));
        }
        out.push_str(&format!(",{}\n", m.boundary_mass_fraction));
    }
    out
}
