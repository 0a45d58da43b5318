//! Periodic-grid discretization: `Ψ(-Δ)` as a Fourier multiplier, its
//! resolvent, the subordination kernel `g^Ψ_ε`, and the upwind drift term.

mod drift;
mod fft;
mod field;
mod grid;
mod io;
mod operator;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::solver::CoefficientSet;

pub use drift::SampledDrift;
pub use fft::Transform;
pub use field::Field;
#[cfg(test)]
pub(crate) use field::l1_distance;
pub use grid::Grid;
pub use io::{read_field, write_field, write_field_csv, FieldHeader, FIELD_FORMAT};
pub use operator::PsiOperator;

/// `Ψ(-Δ) f`, the inverse transform of `Ψ(|k|²) F(f)(k)`.
pub fn apply_psi_laplacian(f: &Field, spec: &BernsteinSpec) -> Result<Field> {
    f.require_finite("apply_psi_laplacian")?;
    let op = PsiOperator::new(*f.grid(), spec);
    Field::new(*f.grid(), op.apply(f.values()))
}

/// `Φ_ε f = (ε + Ψ(-Δ))^{-1} f`.
pub fn resolvent_phi(f: &Field, spec: &BernsteinSpec, eps: f64) -> Result<Field> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(
            "resolvent_phi",
            format!("eps must be positive and finite, got {eps}"),
        ));
    }
    f.require_finite("resolvent_phi")?;
    let op = PsiOperator::new(*f.grid(), spec);
    Field::new(*f.grid(), op.resolvent(eps, f.values()))
}

/// How [`subordination_kernel_with`] computes `g^Ψ_ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRoute {
    /// Time integral `∫ e^{-εt} E[p_{η_t}] dt`, with the inner expectation
    /// taken in Fourier space as `e^{-tΨ(|k|²)}`, then synthesized on the grid.
    Quadrature,
    /// `Φ_ε` applied to a unit point mass at the origin.
    ResolventOfDelta,
}

/// Nodes of the log-spaced rule for `∫_0^∞ e^{-at} dt`.
const KERNEL_T_NODES: usize = 800;
const KERNEL_T_MIN: f64 = 1e-12;

/// `g^Ψ_ε` on the grid, centred at the origin point.
pub fn subordination_kernel(spec: &BernsteinSpec, eps: f64, grid: Grid) -> Result<Field> {
    subordination_kernel_with(spec, eps, grid, KernelRoute::Quadrature)
}

pub fn subordination_kernel_with(
    spec: &BernsteinSpec,
    eps: f64,
    grid: Grid,
    route: KernelRoute,
) -> Result<Field> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(
            "subordination_kernel",
            format!("eps must be positive and finite, got {eps}"),
        ));
    }
    match route {
        KernelRoute::ResolventOfDelta => resolvent_phi(&Field::delta(grid), spec, eps),
        KernelRoute::Quadrature => {
            let op = PsiOperator::new(grid, spec);
            let (x0, x1) = (KERNEL_T_MIN.ln(), (60.0 / eps).ln());
            let dx = (x1 - x0) / (KERNEL_T_NODES - 1) as f64;
            let nodes: Vec<(f64, f64)> = (0..KERNEL_T_NODES)
                .map(|i| {
                    let t = (x0 + dx * i as f64).exp();
                    let w = if i == 0 || i == KERNEL_T_NODES - 1 { 0.5 } else { 1.0 };
                    (t, w * t * dx)
                })
                .collect();
            let hat: Vec<f64> = op
                .symbol()
                .par_iter()
                .map(|&psi| {
                    let rate = eps + psi;
                    // ∫_0^{t_min} e^{-rate t} dt ≈ t_min
                    KERNEL_T_MIN + nodes.iter().map(|&(t, w)| w * (-rate * t).exp()).sum::<f64>()
                })
                .collect();
            let values = if grid.dim() == 1 {
                synthesize_1d(&grid, &hat)
            } else {
                synthesize_fft(&op, &hat)
            };
            Field::new(grid, values)
        }
    }
}

/// Direct cosine sum `g(x) = L^{-1} Σ_j ĝ(k_j) cos(k_j x)`.
fn synthesize_1d(grid: &Grid, hat: &[f64]) -> Vec<f64> {
    let n = grid.points_per_axis();
    let l = grid.box_length();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.coordinate(i);
            (0..n).map(|j| hat[j] * (grid.wavenumber(j) * x).cos()).sum::<f64>() / l
        })
        .collect()
}

fn synthesize_fft(op: &PsiOperator, hat: &[f64]) -> Vec<f64> {
    let grid = op.grid();
    // the factor (-1)^{Σj} moves the origin from slot 0 to slot n/2
    let scale = 1.0 / grid.cell_volume();
    let mut buf: Vec<Complex64> = hat
        .iter()
        .enumerate()
        .map(|(index, &g)| {
            let idx = grid.unravel(index);
            let parity: usize = idx[..grid.dim()].iter().sum();
            let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * g * scale, 0.0)
        })
        .collect();
    op.transform().inverse(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// `div_h(D b*(u))` with upwinding by the sign of `D` at each face.
pub fn divergence_drift(u: &Field, coeffs: &CoefficientSet) -> Result<Field> {
    u.require_finite("divergence_drift")?;
    if coeffs.grid() != u.grid() {
        return Err(Error::InvalidInput(
            "coefficient set was sampled on a different grid".into(),
        ));
    }
    let q: Vec<f64> = u.values().iter().map(|&r| coeffs.b_star(r)).collect();
    let mut out = vec![0.0; q.len()];
    coeffs.drift().divergence_of(&q, &mut out);
    Field::new(*u.grid(), out)
}
