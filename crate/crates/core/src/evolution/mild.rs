use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::solver::{CoefficientSet, ResolventSolver, SolverParams};
use crate::spectral::Field;

/// A failed run, with everything computed before the failing step.
#[derive(Debug, thiserror::Error)]
#[error("time stepping aborted at step {step}: {source}")]
pub struct EvolveError {
    pub step: usize,
    pub partial: Box<Trajectory>,
    #[source]
    pub source: Error,
}

impl From<EvolveError> for Error {
    fn from(e: EvolveError) -> Self {
        e.source
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Keep every `snapshot_every`-th state; the final state is always kept.
    pub snapshot_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { snapshot_every: 1 }
    }
}

impl EvolveOptions {
    /// Every step in one dimension, every tenth otherwise.
    pub fn for_dimension(d: usize) -> Self {
        EvolveOptions {
            snapshot_every: if d == 1 { 1 } else { 10 },
        }
    }
}

/// `K = T/h`, provided `T` is an integer multiple of `h`.
pub fn step_count(horizon: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need h > 0 and a finite horizon >= 0, got h = {h}, T = {horizon}"
        )));
    }
    let k = (horizon / h).round();
    if (k * h - horizon).abs() > 1e-9 * horizon.max(h) {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} is not an integer multiple of the step {h}"
        )));
    }
    Ok(k as usize)
}

/// Implicit Euler `u_{k+1} = J_h u_k` up to `T`.
pub fn evolve_with(
    solver: &ResolventSolver,
    u0: &Field,
    horizon: f64,
    h: f64,
    options: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    let fail = |step, partial: Trajectory, source| EvolveError {
        step,
        partial: Box::new(partial),
        source,
    };
    let mut traj = Trajectory::start(u0.clone(), h);
    let steps = match step_count(horizon, h) {
        Ok(k) => k,
        Err(e) => return Err(fail(0, traj, e)),
    };
    let lambda0 = solver.coefficients().lambda0();
    if h >= lambda0 {
        let e = Error::Precondition(format!(
            "step h = {h} must be below lambda0 = (|(div D)^- + |D||_inf^(1/2) |b|_inf)^(-1) = {lambda0}"
        ));
        return Err(fail(0, traj, e));
    }
    let every = options.snapshot_every.max(1);
    let mut u = u0.clone();
    for k in 1..=steps {
        match solver.solve(&u, h) {
            Ok((next, report)) => {
                let keep = k % every == 0 || k == steps;
                traj.record(k, &next, report.residual, report.iterations, keep);
                u = next;
            }
            Err(e) => return Err(fail(k, traj, e)),
        }
    }
    Ok(traj)
}

pub fn evolve_mild(
    u0: &Field,
    horizon: f64,
    h: f64,
    coeffs: &CoefficientSet,
    spec: &BernsteinSpec,
    params: &SolverParams,
    options: &EvolveOptions,
) -> Result<Trajectory, EvolveError> {
    let solver = ResolventSolver::new(spec, coeffs, params).map_err(|e| EvolveError {
        step: 0,
        partial: Box::new(Trajectory::start(u0.clone(), h)),
        source: e,
    })?;
    evolve_with(&solver, u0, horizon, h, options)
}

/// `sup_t |a(t) - b(t)|_1` over the snapshot times both trajectories share.
pub fn sup_l1_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut shared = 0;
    for (t, ua) in a.times().iter().zip(a.states()) {
        let tol = 1e-9 * t.abs().max(a.step_size());
        if let Some(i) = b.times().iter().position(|s| (s - t).abs() <= tol) {
            ua.require_same_grid(&b.states()[i])?;
            worst = worst.max(ua.l1_distance(&b.states()[i]));
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(Error::InvalidInput("trajectories share no output times".into()));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementPair {
    pub h_coarse: f64,
    pub h_fine: f64,
    /// `sup_t |u_{h_coarse}(t) - u_{h_fine}(t)|_1` over the coarse output times.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub h_list: Vec<f64>,
    pub pairs: Vec<RefinementPair>,
    /// `log(d_i / d_{i+1}) / log(h_i / h_{i+1})` for successive pairs.
    pub empirical_orders: Vec<f64>,
    /// Distances strictly decreasing along the list.
    pub cauchy_decreasing: bool,
    /// `sup_t |u_h(t) - u_exact(t)|_1` per step size, when an exact solution is known.
    pub errors_vs_exact: Option<Vec<f64>>,
    pub orders_vs_exact: Option<Vec<f64>>,
}

/// Self-convergence of the implicit Euler scheme along a decreasing list of steps.
///
/// `exact(t)`, if given, is compared against every run at the coarse output times.
pub fn refinement_study(
    solver: &ResolventSolver,
    u0: &Field,
    horizon: f64,
    h_list: &[f64],
    exact: Option<&dyn Fn(f64) -> Field>,
) -> Result<RefinementReport> {
    if h_list.is_empty() || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(format!(
            "h_list must be nonempty and strictly decreasing, got {h_list:?}"
        )));
    }
    let coarse = h_list[0];
    let mut runs = Vec::with_capacity(h_list.len());
    for &h in h_list {
        step_count(horizon, h)?;
        let ratio = step_count(coarse, h)?.max(1);
        let traj = evolve_with(solver, u0, horizon, h, &EvolveOptions { snapshot_every: ratio })?;
        runs.push(traj);
    }
    let pairs: Vec<RefinementPair> = h_list
        .windows(2)
        .zip(runs.windows(2))
        .map(|(h, r)| {
            Ok(RefinementPair {
                h_coarse: h[0],
                h_fine: h[1],
                distance: sup_l1_distance(&r[0], &r[1])?,
            })
        })
        .collect::<Result<_>>()?;
    let orders = |vals: &[f64]| -> Vec<f64> {
        vals.windows(2)
            .zip(h_list.windows(2))
            .map(|(d, h)| (d[0] / d[1]).ln() / (h[0] / h[1]).ln())
            .collect()
    };
    let distances: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
    let empirical_orders = orders(&distances);
    let cauchy_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    let (errors_vs_exact, orders_vs_exact) = match exact {
        Some(exact) => {
            let errs: Vec<f64> = runs
                .iter()
                .map(|r| {
                    r.times()
                        .iter()
                        .zip(r.states())
                        .map(|(&t, u)| u.l1_distance(&exact(t)))
                        .fold(0.0, f64::max)
                })
                .collect();
            let o = orders(&errs);
            (Some(errs), Some(o))
        }
        None => (None, None),
    };
    Ok(RefinementReport {
        h_list: h_list.to_vec(),
        pairs,
        empirical_orders,
        cauchy_decreasing,
        errors_vs_exact,
        orders_vs_exact,
    })
}
