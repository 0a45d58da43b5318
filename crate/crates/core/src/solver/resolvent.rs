//! The resolvent `J_λ f = y` of `y + λΨ(-Δ)β(y) + λ div(D b*(y)) = f`.
//!
//! Each stage solves the `ε`-regularized equation (`β_ε = β + ε r`) by the
//! damped iteration
//!
//! ```text
//! y ← y - ω (I + λ L Ψ(-Δ))^{-1} F_ε(y),   F_ε(y) = y + λΨ(-Δ)β_ε(y) + λ div_h(D b*(y)) - f
//! ```
//!
//! where `L` bounds `β_ε'` on the a priori range `|y| ≤ γ|f|_∞`. The
//! preconditioner is `κΦ_κ` with `κ = 1/(λL)`. Without drift the iteration
//! matrix is similar to a symmetric pencil with spectrum in `(0, 1]`, so every
//! `ω ∈ (0, 1]` converges. The iterate starts at `f` and every correction has
//! zero mean, so mass is conserved exactly up to rounding.

use serde::{Deserialize, Serialize};

use super::CoefficientSet;
use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::spectral::{Field, PsiOperator};

fn default_schedule() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}
fn default_damping() -> f64 {
    0.7
}
fn default_rel_tol() -> f64 {
    1e-9
}
fn default_max_iter() -> usize {
    500
}
fn default_anderson() -> usize {
    0
}
fn default_stage_slack() -> f64 {
    1e3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    /// Decreasing regularizations; a final `ε = 0` stage always follows.
    #[serde(default = "default_schedule")]
    pub eps_schedule: Vec<f64>,
    #[serde(default = "default_damping")]
    pub damping: f64,
    /// Absolute L¹ tolerance; `None` means `rel_tol · |f|_1`.
    #[serde(default)]
    pub tol_fixedpoint: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Per stage.
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Anderson mixing depth; 0 gives plain damped iteration.
    #[serde(default = "default_anderson")]
    pub anderson_depth: usize,
    /// Regularized stages stop at `stage_slack · tol`.
    #[serde(default = "default_stage_slack")]
    pub stage_slack: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            eps_schedule: default_schedule(),
            damping: default_damping(),
            tol_fixedpoint: None,
            rel_tol: default_rel_tol(),
            max_iter: default_max_iter(),
            anderson_depth: default_anderson(),
            stage_slack: default_stage_slack(),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.eps_schedule.iter().any(|&e| !(e > 0.0) || !e.is_finite())
            || self.eps_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return bad(format!(
                "eps_schedule must be positive and strictly decreasing, got {:?}",
                self.eps_schedule
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if let Some(tol) = self.tol_fixedpoint {
            if !(tol > 0.0) {
                return bad(format!("tol_fixedpoint must be positive, got {tol}"));
            }
        }
        if !(self.rel_tol > 0.0) || self.max_iter == 0 || !(self.stage_slack >= 1.0) {
            return bad("rel_tol > 0, max_iter >= 1 and stage_slack >= 1 are required".into());
        }
        Ok(())
    }

    /// The absolute tolerance used for a right-hand side with `|f|_1 = l1`.
    pub fn tolerance_for(&self, l1: f64) -> f64 {
        self.tol_fixedpoint
            .unwrap_or_else(|| (self.rel_tol * l1).max(f64::MIN_POSITIVE))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub eps: f64,
    pub lipschitz: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// Residual decreased at every iteration after the first.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub lambda: f64,
    pub tol: f64,
    /// L¹ residual of the unregularized equation at the returned iterate.
    pub residual: f64,
    pub iterations: usize,
    pub stages: Vec<StageReport>,
}

/// Pointwise pieces of a resolvent equation `y + λΨ(-Δ)A(y) + λ div_h(D B(y)) = f`.
pub(crate) trait Closure: Sync {
    /// `A(y_i)` at point `i`.
    fn diffusion(&self, i: usize, y: f64) -> f64;
    /// `B(y_i)` at point `i`.
    fn transport(&self, i: usize, y: f64) -> f64;
}

struct Nonlinear<'a>(&'a CoefficientSet);

impl Closure for Nonlinear<'_> {
    fn diffusion(&self, _: usize, y: f64) -> f64 {
        self.0.beta(y)
    }
    fn transport(&self, _: usize, y: f64) -> f64 {
        self.0.b_star(y)
    }
}

/// A reusable solver for one grid, Bernstein function and coefficient set.
#[derive(Clone, Debug)]
pub struct ResolventSolver {
    op: PsiOperator,
    coeffs: CoefficientSet,
    params: SolverParams,
}

impl ResolventSolver {
    pub fn new(spec: &BernsteinSpec, coeffs: &CoefficientSet, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        Ok(ResolventSolver {
            op: PsiOperator::new(*coeffs.grid(), spec),
            coeffs: coeffs.clone(),
            params: params.clone(),
        })
    }

    pub fn operator(&self) -> &PsiOperator {
        &self.op
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// `J_λ f`. Requires `0 < λ < λ₀`.
    pub fn solve(&self, f: &Field, lambda: f64) -> Result<(Field, SolverReport)> {
        let lambda0 = self.coeffs.lambda0();
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain("resolvent_step", format!("lambda must be positive, got {lambda}")));
        }
        if lambda >= lambda0 {
            return Err(Error::Precondition(format!(
                "lambda = {lambda} must be below lambda0 = (|(div D)^- + |D||_inf^(1/2) |b|_inf)^(-1) = {lambda0}"
            )));
        }
        if f.grid() != self.coeffs.grid() {
            return Err(Error::InvalidInput("right-hand side lives on a different grid".into()));
        }
        f.require_finite("resolvent_step")?;
        let range = self.coeffs.gamma() * f.sup_norm();
        let lip = self.coeffs.lipschitz_beta(range);
        self.solve_closure(f, lambda, lip, &Nonlinear(&self.coeffs), true)
    }

    /// Continuation over the `ε` schedule (when `continuation` is set)
    /// followed by the `ε = 0` polish.
    pub(crate) fn solve_closure(
        &self,
        f: &Field,
        lambda: f64,
        lipschitz: f64,
        closure: &dyn Closure,
        continuation: bool,
    ) -> Result<(Field, SolverReport)> {
        let tol = self.params.tolerance_for(f.l1_norm());
        let mut y = f.values().to_vec();
        let mut stages = Vec::new();
        let mut iterations = 0;
        let regularized = if continuation { &self.params.eps_schedule[..] } else { &[] };
        let schedule: Vec<f64> = regularized.iter().copied().chain([0.0]).collect();
        for &eps in &schedule {
            let stage_tol = if eps > 0.0 { tol * self.params.stage_slack } else { tol };
            let lip = (lipschitz + eps).max(f64::MIN_POSITIVE);
            let stage = self.iterate(f.values(), &mut y, lambda, eps, lip, stage_tol, closure);
            iterations += stage.iterations;
            let last = *stage.residual_history.last().expect("at least one residual");
            let done = last <= stage_tol;
            stages.push(stage);
            if !done {
                return Err(Error::NonConvergence {
                    what: "resolvent fixed-point iteration",
                    iterations,
                    residual: last,
                    tolerance: stage_tol,
                });
            }
        }
        let residual = *stages
            .last()
            .and_then(|s| s.residual_history.last())
            .expect("final stage ran");
        Ok((
            Field::new(*f.grid(), y)?,
            SolverReport {
                lambda,
                tol,
                residual,
                iterations,
                stages,
            },
        ))
    }

    /// One stage. Returns once the residual drops below `stage_tol` or
    /// `max_iter` corrections have been applied.
    #[allow(clippy::too_many_arguments)]
    fn iterate(
        &self,
        f: &[f64],
        y: &mut Vec<f64>,
        lambda: f64,
        eps: f64,
        lip: f64,
        stage_tol: f64,
        closure: &dyn Closure,
    ) -> StageReport {
        let n = f.len();
        let cell = self.op.grid().cell_volume();
        let omega = self.params.damping;
        let mut history = Vec::new();
        let mut anderson = Anderson::new(self.params.anderson_depth, n);
        let mut drift_out = vec![0.0; n];
        let mut iterations = 0;
        loop {
            // G = y - f + λ div_h(D B(y)),  A = β_ε(y)
            let transported: Vec<f64> = y.iter().enumerate().map(|(i, &v)| closure.transport(i, v)).collect();
            self.coeffs.drift().divergence_of(&transported, &mut drift_out);
            let g: Vec<f64> = (0..n).map(|i| y[i] - f[i] + lambda * drift_out[i]).collect();
            let a: Vec<f64> = y
                .iter()
                .enumerate()
                .map(|(i, &v)| closure.diffusion(i, v) + eps * v)
                .collect();
            // F = G + λΨA and U = P^{-1}F in one pair of transforms
            let (residual, update) = self.op.mix2(&g, &a, |psi| {
                let p = 1.0 / (1.0 + lambda * lip * psi);
                [[1.0, lambda * psi], [p, p * lambda * psi]]
            });
            let r1 = residual.iter().map(|v| v.abs()).sum::<f64>() * cell;
            history.push(r1);
            if r1 <= stage_tol || iterations >= self.params.max_iter || !r1.is_finite() {
                break;
            }
            let step: Vec<f64> = update.iter().map(|u| -omega * u).collect();
            anderson.advance(y, &step);
            iterations += 1;
        }
        let monotone = history.windows(2).skip(1).all(|w| w[1] <= w[0]);
        StageReport {
            eps,
            lipschitz: lip,
            iterations,
            residual_history: history,
            monotone,
        }
    }
}

/// Type-II Anderson mixing for the fixed-point map `x ↦ x + step(x)`.
///
/// The new iterate is an affine combination of past images, so any linear
/// invariant of every image (here the mass) is preserved.
struct Anderson {
    depth: usize,
    prev_x: Option<Vec<f64>>,
    prev_step: Option<Vec<f64>>,
    d_steps: Vec<Vec<f64>>,
    d_images: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize, _n: usize) -> Self {
        Anderson {
            depth,
            prev_x: None,
            prev_step: None,
            d_steps: Vec::new(),
            d_images: Vec::new(),
        }
    }

    fn advance(&mut self, x: &mut [f64], step: &[f64]) {
        let image: Vec<f64> = x.iter().zip(step).map(|(a, b)| a + b).collect();
        if self.depth == 0 {
            x.copy_from_slice(&image);
            return;
        }
        if let (Some(px), Some(ps)) = (&self.prev_x, &self.prev_step) {
            let ds: Vec<f64> = step.iter().zip(ps).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = (0..x.len()).map(|i| (x[i] + step[i]) - (px[i] + ps[i])).collect();
            self.d_steps.push(ds);
            self.d_images.push(dg);
            if self.d_steps.len() > self.depth {
                self.d_steps.remove(0);
                self.d_images.remove(0);
            }
        }
        self.prev_x = Some(x.to_vec());
        self.prev_step = Some(step.to_vec());
        let m = self.d_steps.len();
        let mut next = image;
        if m > 0 {
            if let Some(coef) = least_squares(&self.d_steps, step) {
                for (c, dg) in coef.iter().zip(&self.d_images) {
                    for (v, d) in next.iter_mut().zip(dg) {
                        *v -= c * d;
                    }
                }
            }
        }
        x.copy_from_slice(&next);
    }
}

/// `argmin_c |r - Σ c_j cols_j|_2` by regularized normal equations.
fn least_squares(cols: &[Vec<f64>], r: &[f64]) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..=i {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
            a[i][j] = v;
            a[j][i] = v;
        }
        a[i][m] = cols[i].iter().zip(r).map(|(x, y)| x * y).sum();
    }
    let scale = (0..m).map(|i| a[i][i]).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1e-12 * scale;
    }
    // Gaussian elimination with partial pivoting
    for col in 0..m {
        let piv = (col..m).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return None;
        }
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            for k in col..=m {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut c = vec![0.0; m];
    for i in (0..m).rev() {
        let tail: f64 = (i + 1..m).map(|k| a[i][k] * c[k]).sum();
        c[i] = (a[i][m] - tail) / a[i][i];
    }
    c.iter().all(|v| v.is_finite()).then_some(c)
}

/// `J_λ f` with a one-off solver.
pub fn resolvent_step(
    f: &Field,
    lambda: f64,
    coeffs: &CoefficientSet,
    spec: &BernsteinSpec,
    params: &SolverParams,
) -> Result<(Field, SolverReport)> {
    ResolventSolver::new(spec, coeffs, params)?.solve(f, lambda)
}
