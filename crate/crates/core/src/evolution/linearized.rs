//! The linear equation `v_t + Ψ(-Δ)(c v) + div(D b(u) v) = 0` with
//! `c = β(u)/u` frozen from a computed nonlinear trajectory `u`.
//!
//! Step `k → k+1` freezes the coefficients at `u_{k+1}`, the state the
//! implicit step for `u` lands on. With that choice `u` itself solves the
//! discrete linear problem, so `v_0 = u_0` must reproduce `u` to solver
//! tolerance.

use super::Trajectory;
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::solver::{Closure, CoefficientSet, ResolventSolver, SolverParams};
use crate::spectral::Field;

/// `u_floor = U_FLOOR_REL · |u|_∞`, below which `β(u)/u` becomes `β'(0)`.
pub const U_FLOOR_REL: f64 = 1e-12;

struct Frozen {
    c: Vec<f64>,
    b: Vec<f64>,
}

impl Closure for Frozen {
    fn diffusion(&self, i: usize, v: f64) -> f64 {
        self.c[i] * v
    }
    fn transport(&self, i: usize, v: f64) -> f64 {
        self.b[i] * v
    }
}

fn freeze(coeffs: &CoefficientSet, u: &Field) -> Frozen {
    let floor = U_FLOOR_REL * u.sup_norm();
    Frozen {
        c: u.values().iter().map(|&r| coeffs.beta_ratio(r, floor)).collect(),
        b: u.values().iter().map(|&r| coeffs.b(r)).collect(),
    }
}

fn require_dense(u_traj: &Trajectory) -> Result<()> {
    if u_traj.is_dense() {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "the frozen coefficients need every step of the trajectory (snapshot_every = 1)".into(),
        ))
    }
}

/// Implicit Euler for the frozen-coefficient linear equation, one linear
/// solve per step.
pub fn solve_linearized_fp_with(solver: &ResolventSolver, u_traj: &Trajectory, v0: &Field) -> Result<Trajectory> {
    require_dense(u_traj)?;
    v0.require_same_grid(u_traj.initial())?;
    let h = u_traj.step_size();
    let coeffs = solver.coefficients();
    if h >= coeffs.lambda0() {
        return Err(Error::Precondition(format!(
            "step h = {h} must be below lambda0 = {}",
            coeffs.lambda0()
        )));
    }
    let mut out = Trajectory::start(v0.clone(), h);
    let mut v = v0.clone();
    for (k, u_next) in u_traj.states().iter().enumerate().skip(1) {
        let frozen = freeze(coeffs, u_next);
        let lip = frozen.c.iter().copied().fold(0.0, f64::max);
        let (next, report) = solver.solve_closure(&v, h, lip, &frozen, false)?;
        out.record(k, &next, report.residual, report.iterations, true);
        v = next;
    }
    Ok(out)
}

pub fn solve_linearized_fp(
    u_traj: &Trajectory,
    v0: &Field,
    coeffs: &CoefficientSet,
    spec: &BernsteinSpec,
    params: &SolverParams,
) -> Result<Trajectory> {
    solve_linearized_fp_with(&ResolventSolver::new(spec, coeffs, params)?, u_traj, v0)
}

/// `|u_{k+1} + hΨ(-Δ)(c u_{k+1}) + h div_h(D b u_{k+1}) - u_k|_1` for every
/// step, with the coefficients frozen from `u_{k+1}`.
pub fn frozen_coefficient_residuals(solver: &ResolventSolver, u_traj: &Trajectory) -> Result<Vec<f64>> {
    require_dense(u_traj)?;
    let h = u_traj.step_size();
    let coeffs = solver.coefficients();
    let cell = u_traj.initial().grid().cell_volume();
    let mut drift = vec![0.0; u_traj.initial().values().len()];
    u_traj
        .states()
        .windows(2)
        .map(|w| {
            let (prev, next) = (w[0].values(), w[1].values());
            let frozen = freeze(coeffs, &w[1]);
            let cu: Vec<f64> = next.iter().zip(&frozen.c).map(|(u, c)| c * u).collect();
            let bu: Vec<f64> = next.iter().zip(&frozen.b).map(|(u, b)| b * u).collect();
            coeffs.drift().divergence_of(&bu, &mut drift);
            let diffusion = solver.operator().apply(&cu);
            let r: f64 = (0..next.len())
                .map(|i| (next[i] + h * diffusion[i] + h * drift[i] - prev[i]).abs())
                .sum();
            Ok(r * cell)
        })
        .collect()
}
