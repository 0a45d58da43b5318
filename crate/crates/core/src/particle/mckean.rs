use serde::{Deserialize, Serialize};

use super::{empirical_density, init_ensemble, marginal_comparison, silverman_bandwidth, step_ensemble};
use super::{MarginalMetrics, ParticleEnsemble};
use crate::bernstein::{check_hypotheses, default_probe_grid, BernsteinSpec, SubordinatorSampler};
use crate::error::{Error, Result};
use crate::evolution::{step_count, Trajectory};
use crate::solver::CoefficientSet;
use crate::spectral::Field;

/// Where the particles read the density that sets their coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// From the PDE trajectory.
    PdeCoupled,
    /// From the KDE of the ensemble itself (the McKean–Vlasov closure).
    SelfCoupled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McKeanOptions {
    pub particles: usize,
    pub seed: u64,
    pub mode: CouplingMode,
    /// Fixed KDE bandwidth; Silverman's rule at every step when absent.
    pub bandwidth: Option<f64>,
    /// Run even if the jump measure has no finite log-moment.
    pub allow_hypothesis_fail: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McKeanReport {
    pub mode: CouplingMode,
    pub particles: usize,
    pub seed: u64,
    pub step: f64,
    pub steps: usize,
    pub log_moment_finite: bool,
    /// Bandwidth used for the last comparison.
    pub final_bandwidth: f64,
    /// One entry per time at which the reference trajectory has a state.
    pub metrics: Vec<MarginalMetrics>,
}

impl McKeanReport {
    pub fn final_metrics(&self) -> Option<&MarginalMetrics> {
        self.metrics.last()
    }
}

/// Reference states at the particle times `k h`.
fn reference_lookup<'a>(traj: &'a Trajectory, h: f64) -> Result<impl Fn(usize) -> Option<&'a Field>> {
    let ratio = (h / traj.step_size()).round();
    if ratio < 1.0 || (ratio * traj.step_size() - h).abs() > 1e-9 * h {
        return Err(Error::InvalidInput(format!(
            "particle step {h} must be a multiple of the trajectory step {}",
            traj.step_size()
        )));
    }
    let ratio = ratio as usize;
    Ok(move |k: usize| traj.state_at_step(k * ratio))
}

/// Simulate the particle system up to `horizon` and compare its marginals
/// with `reference` wherever the reference has a state.
///
/// Pde-coupled runs need the reference at every particle step.
pub fn run_mckean(
    u0: &Field,
    reference: Option<&Trajectory>,
    horizon: f64,
    h: f64,
    coeffs: &CoefficientSet,
    spec: &BernsteinSpec,
    options: &McKeanOptions,
) -> Result<(McKeanReport, ParticleEnsemble)> {
    let hyp = check_hypotheses(spec, &default_probe_grid())?;
    let log_moment_finite = hyp.log_moment.is_finite();
    if !log_moment_finite && !options.allow_hypothesis_fail {
        return Err(Error::Precondition(
            "the jump measure needs a finite log-moment for the particle picture".into(),
        ));
    }
    let steps = step_count(horizon, h)?;
    let lookup = reference.map(|t| reference_lookup(t, h)).transpose()?;
    if options.mode == CouplingMode::PdeCoupled {
        let lookup = lookup
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("pde-coupled mode needs a PDE trajectory".into()))?;
        if let Some(k) = (0..steps).find(|&k| lookup(k).is_none()) {
            return Err(Error::InvalidInput(format!(
                "the trajectory has no state at particle step {k}; store every step"
            )));
        }
    }
    let grid = *u0.grid();
    let sampler = SubordinatorSampler::new(spec);
    let mut ens = init_ensemble(u0, options.particles, options.seed)?;
    let bandwidth = |e: &ParticleEnsemble| options.bandwidth.unwrap_or_else(|| silverman_bandwidth(e, grid.spacing()));
    let mut metrics = Vec::new();
    let mut final_bandwidth = bandwidth(&ens);
    let mut measure = |k: usize, e: &ParticleEnsemble, metrics: &mut Vec<MarginalMetrics>| -> Result<()> {
        if let Some(u) = lookup.as_ref().and_then(|l| l(k)) {
            final_bandwidth = bandwidth(e);
            metrics.push(marginal_comparison(u, e, final_bandwidth)?);
        }
        Ok(())
    };
    measure(0, &ens, &mut metrics)?;
    for k in 0..steps {
        let owned;
        let u = match options.mode {
            CouplingMode::PdeCoupled => lookup.as_ref().and_then(|l| l(k)).expect("checked above"),
            CouplingMode::SelfCoupled => {
                owned = empirical_density(&ens, &grid, bandwidth(&ens))?;
                &owned
            }
        };
        step_ensemble(&mut ens, u, h, coeffs, &sampler, true)?;
        measure(k + 1, &ens, &mut metrics)?;
    }
    Ok((
        McKeanReport {
            mode: options.mode,
            particles: options.particles,
            seed: options.seed,
            step: h,
            steps,
            log_moment_finite,
            final_bandwidth,
            metrics,
        },
        ens,
    ))
}
