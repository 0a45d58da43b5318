//! Space-time weak form
//!
//! ```text
//! ∫∫ u φ_t - Ψ(-Δ)φ β(u) + b(u) u D·∇φ dx dt + ∫ φ(0) u_0 dx
//! ```
//!
//! evaluated exactly for the piecewise-constant interpolant `u_h = u_{k+1}` on
//! `(t_k, t_{k+1}]`, with `D·∇` replaced by minus the adjoint of `div_h`.

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::solver::CoefficientSet;
use crate::spectral::{Field, Grid, PsiOperator};

/// `φ(t, x) = amplitude · χ(t) · ψ(x)` with `χ = 1` on `[0, flat_until]`,
/// smoothly decreasing to 0 at `vanish_at`, and `ψ` the standard bump
/// `exp(-1/(1 - |x - center|²/radius²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub flat_until: f64,
    pub vanish_at: f64,
}

fn smooth_step(x: f64) -> f64 {
    // 0 for x ≤ 0, 1 for x ≥ 1, C^∞ in between
    let e = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    let (a, b) = (e(x), e(1.0 - x));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl TestFunction {
    pub fn zero(d: usize) -> Self {
        TestFunction {
            amplitude: 0.0,
            center: vec![0.0; d],
            radius: 1.0,
            flat_until: 0.0,
            vanish_at: 0.0,
        }
    }

    pub fn time_profile(&self, t: f64) -> f64 {
        if t <= self.flat_until {
            1.0
        } else if t >= self.vanish_at {
            0.0
        } else {
            1.0 - smooth_step((t - self.flat_until) / (self.vanish_at - self.flat_until))
        }
    }

    pub fn space_profile(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>()
            / (self.radius * self.radius);
        if r2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r2)).exp()
        }
    }

    fn validate(&self, grid: &Grid, horizon: f64) -> Result<()> {
        let half = 0.5 * grid.box_length();
        let inside = self.center.len() == grid.dim()
            && self.radius > 0.0
            && self.center.iter().all(|c| c.abs() + self.radius < half);
        if !inside {
            return Err(Error::domain(
                "weak_form_residual",
                "spatial support of the test function must lie inside the torus",
            ));
        }
        if self.amplitude != 0.0
            && !(0.0 <= self.flat_until && self.flat_until < self.vanish_at && self.vanish_at <= horizon)
        {
            return Err(Error::domain(
                "weak_form_residual",
                format!(
                    "time support must satisfy 0 <= flat_until < vanish_at <= T = {horizon}, got ({}, {})",
                    self.flat_until, self.vanish_at
                ),
            ));
        }
        Ok(())
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn integrate_profile(tf: &TestFunction, a: f64, b: f64) -> f64 {
    // split at the kinks of χ so each piece is smooth
    let mut cuts = vec![a, b];
    for k in [tf.flat_until, tf.vanish_at] {
        if k > a && k < b {
            cuts.push(k);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            half * GAUSS5.iter().map(|&(x, wt)| wt * tf.time_profile(mid + half * x)).sum::<f64>()
        })
        .sum()
}

/// The weak-form defect of a dense trajectory against `φ`.
pub fn weak_form_residual(
    u_traj: &Trajectory,
    testfn: &TestFunction,
    spec: &BernsteinSpec,
    coeffs: &CoefficientSet,
) -> Result<f64> {
    let op = PsiOperator::new(*u_traj.initial().grid(), spec);
    weak_form_residual_with(&op, u_traj, testfn, coeffs)
}

pub fn weak_form_residual_with(
    op: &PsiOperator,
    u_traj: &Trajectory,
    testfn: &TestFunction,
    coeffs: &CoefficientSet,
) -> Result<f64> {
    if !u_traj.is_dense() {
        return Err(Error::InvalidInput(
            "the weak form needs every step of the trajectory (snapshot_every = 1)".into(),
        ));
    }
    let grid = *u_traj.initial().grid();
    let h = u_traj.step_size();
    let horizon = u_traj.steps_taken() as f64 * h;
    testfn.validate(&grid, horizon)?;
    if testfn.amplitude == 0.0 {
        return Ok(0.0);
    }
    let psi = Field::from_fn(grid, |x| testfn.amplitude * testfn.space_profile(x));
    let psi_psi = Field::new(grid, op.apply(psi.values()))?;
    let mut drift = vec![0.0; grid.len()];
    let mut total = testfn.time_profile(0.0) * psi.inner(u_traj.initial());
    for (k, u) in u_traj.states().iter().enumerate().skip(1) {
        let (t0, t1) = ((k - 1) as f64 * h, k as f64 * h);
        let dchi = testfn.time_profile(t1) - testfn.time_profile(t0);
        let x_k = integrate_profile(testfn, t0, t1);
        if dchi == 0.0 && x_k == 0.0 {
            continue;
        }
        let beta: Field = u.map(|r| coeffs.beta(r));
        let q: Vec<f64> = u.values().iter().map(|&r| coeffs.b_star(r)).collect();
        coeffs.drift().divergence_of(&q, &mut drift);
        let drift_term: f64 = drift.iter().zip(psi.values()).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
        total += dchi * psi.inner(u) - x_k * psi_psi.inner(&beta) - x_k * drift_term;
    }
    Ok(total)
}
