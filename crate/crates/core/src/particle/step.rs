use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::ParticleEnsemble;
use crate::bernstein::SubordinatorSampler;
use crate::error::{Error, Result};
use crate::evolution::U_FLOOR_REL;
use crate::solver::CoefficientSet;
use crate::spectral::Field;

/// Multilinear interpolation of `u` at `x`, with torus wrap.
pub fn interpolate(u: &Field, x: &[f64]) -> f64 {
    let grid = u.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let x0 = grid.coordinate(0);
    let d = grid.dim();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..d {
        let s = (grid.wrap(x[a]) - x0) / h;
        let f = s.floor();
        base[a] = (f as i64).rem_euclid(n as i64) as usize;
        frac[a] = s - f;
    }
    let values = u.values();
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = 0;
        for a in 0..d {
            let up = (corner >> a) & 1 == 1;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            idx += ((base[a] + up as usize) % n) * grid.stride(a);
        }
        acc += w * values[idx];
    }
    acc
}

/// One frozen-coefficient Euler step of the jump diffusion generated by
/// `c(x) Ψ(-Δ) + b(u(x)) D(x)·∇` with `c = β(u)/u`.
///
/// `u` is the density at the ensemble's current time. With `jumps = false`
/// only the drift moves the particles.
pub fn step_ensemble(
    ens: &mut ParticleEnsemble,
    u: &Field,
    h: f64,
    coeffs: &CoefficientSet,
    sampler: &SubordinatorSampler,
    jumps: bool,
) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    if u.grid().dim() != ens.d {
        return Err(Error::InvalidInput(format!(
            "density is {}-dimensional, ensemble is {}-dimensional",
            u.grid().dim(),
            ens.d
        )));
    }
    u.require_finite("step_ensemble")?;
    let d = ens.d;
    let floor = U_FLOOR_REL * u.sup_norm();
    let drift = &coeffs.descriptor().drift;
    let chunk = ens.shard_len() * d;
    ens.positions
        .par_chunks_mut(chunk)
        .zip(ens.streams.par_iter_mut())
        .for_each(|(block, rng)| {
            let mut v = [0.0; 3];
            for p in block.chunks_mut(d) {
                let ux = interpolate(u, p);
                let speed = coeffs.b(ux);
                let c = coeffs.beta_ratio(ux, floor).max(0.0);
                drift.eval(p, &mut v[..d]);
                for a in 0..d {
                    p[a] += h * speed * v[a];
                }
                if jumps && c * h > 0.0 {
                    let tau = sampler.sample(c * h, rng);
                    let scale = (2.0 * tau).sqrt();
                    for x in p.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *x += scale * z;
                    }
                }
            }
        });
    if ens.positions.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("step_ensemble", "a particle left the finite range"));
    }
    ens.time += h;
    Ok(())
}
