//! Samplers for the subordinator `η_t` with `E[e^{-λ η_t}] = e^{-tΨ(λ)}`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use super::{BernsteinSpec, MeasureDescriptor};
use crate::error::{Error, Result};

/// Default bound on `∫_0^δ τ² μ(dτ)` for the jumps replaced by drift.
pub const DEFAULT_SMALL_JUMP_BUDGET: f64 = 1e-6;

/// Prepared sampler; building it once amortizes the jump tables.
#[derive(Clone, Debug)]
pub enum SubordinatorSampler {
    /// Exact one-sided stable law of index `s` (Kanter / Chambers–Mallows–Stuck).
    Stable { s: f64 },
    /// Independent Poisson counts per atom.
    Atoms { locations: Vec<f64>, weights: Vec<f64> },
    /// Drift for jumps below `cutoff`, compound Poisson above it.
    CompoundPoisson {
        cutoff: f64,
        drift: f64,
        rate: f64,
        locations: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

impl SubordinatorSampler {
    pub fn new(spec: &BernsteinSpec) -> Self {
        Self::with_budget(spec, DEFAULT_SMALL_JUMP_BUDGET)
    }

    /// `small_jump_budget` bounds `∫_0^δ τ² μ(dτ)`, which controls the
    /// Laplace-transform error `≈ t λ² budget / 2` of drift compensation.
    pub fn with_budget(spec: &BernsteinSpec, small_jump_budget: f64) -> Self {
        match spec.measure() {
            MeasureDescriptor::FractionalPower { s } => SubordinatorSampler::Stable { s: *s },
            MeasureDescriptor::AtomicMix { atoms } => SubordinatorSampler::Atoms {
                locations: atoms.iter().map(|a| a.t).collect(),
                weights: atoms.iter().map(|a| a.w).collect(),
            },
            MeasureDescriptor::QuadratureDensity { .. } => {
                let table = spec.table().expect("quadrature table is built");
                let mut second = table.left_second_moment;
                let mut drift = table.left_first_moment;
                let mut first_big = 0;
                for (i, (&t, &w)) in table.nodes.iter().zip(&table.masses).enumerate() {
                    if second + w * t * t > small_jump_budget {
                        break;
                    }
                    second += w * t * t;
                    drift += w * t;
                    first_big = i + 1;
                }
                let cutoff = if first_big == 0 {
                    0.0
                } else {
                    table.nodes[first_big - 1]
                };
                let mut locations: Vec<f64> = table.nodes[first_big..].to_vec();
                let mut masses: Vec<f64> = table.masses[first_big..].to_vec();
                if table.right_mass > 0.0 {
                    locations.push(table.t_max());
                    masses.push(table.right_mass);
                }
                let mut acc = 0.0;
                let cumulative: Vec<f64> = masses
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                SubordinatorSampler::CompoundPoisson {
                    cutoff,
                    drift,
                    rate: acc,
                    locations,
                    cumulative,
                }
            }
        }
    }

    /// Draw `η_t`. `t = 0` returns 0.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            SubordinatorSampler::Stable { s } => t.powf(1.0 / s) * positive_stable(*s, rng),
            SubordinatorSampler::Atoms { locations, weights } => locations
                .iter()
                .zip(weights)
                .map(|(&loc, &w)| loc * poisson(t * w, rng))
                .sum(),
            SubordinatorSampler::CompoundPoisson {
                drift,
                rate,
                locations,
                cumulative,
                ..
            } => {
                let jumps = poisson(t * rate, rng) as usize;
                let total = *cumulative.last().unwrap_or(&0.0);
                let mut x = t * drift;
                for _ in 0..jumps {
                    let u = rng.random::<f64>() * total;
                    let k = cumulative.partition_point(|&c| c <= u).min(locations.len() - 1);
                    x += locations[k];
                }
                x
            }
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One-sided stable variable with `E[e^{-λS}] = e^{-λ^s}`, `0 < s < 1`.
pub(crate) fn positive_stable<R: Rng + ?Sized>(s: f64, rng: &mut R) -> f64 {
    let u = PI * open01(rng);
    let w: f64 = Exp1.sample(rng);
    let a = (s * u).sin() / u.sin().powf(1.0 / s);
    let b = (((1.0 - s) * u).sin() / w).powf((1.0 - s) / s);
    a * b
}

/// Sample `η_t` for a spec. Prefer [`SubordinatorSampler`] in loops.
pub fn sample_subordinator_increment<R: Rng + ?Sized>(
    spec: &BernsteinSpec,
    t: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(
            "sample_subordinator_increment",
            format!("t must be positive and finite, got {t}"),
        ));
    }
    Ok(SubordinatorSampler::new(spec).sample(t, rng))
}
