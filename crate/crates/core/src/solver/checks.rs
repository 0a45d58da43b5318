use serde::{Deserialize, Serialize};

use super::ResolventSolver;
use crate::error::{Error, Result};
use crate::spectral::Field;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub lambda: f64,
    /// `|J_λ f₁ - J_λ f₂|_1`.
    pub output_distance: f64,
    /// `|f₁ - f₂|_1`.
    pub input_distance: f64,
    /// `input_distance - output_distance`.
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

/// L¹ contraction of `J_λ`; passes when `margin ≥ -2 tol`.
pub fn check_l1_contraction(
    solver: &ResolventSolver,
    f1: &Field,
    f2: &Field,
    lambda: f64,
) -> Result<ContractionReport> {
    f1.require_same_grid(f2)?;
    let (y1, r1) = solver.solve(f1, lambda)?;
    let (y2, r2) = solver.solve(f2, lambda)?;
    let tol = r1.tol.max(r2.tol);
    let output_distance = y1.l1_distance(&y2);
    let input_distance = f1.l1_distance(f2);
    let margin = input_distance - output_distance;
    Ok(ContractionReport {
        lambda,
        output_distance,
        input_distance,
        margin,
        tol,
        pass: margin >= -2.0 * tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventIdentityReport {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `|J_{λ₂} f - J_{λ₁}(λ₁/λ₂ f + (1 - λ₁/λ₂) J_{λ₂} f)|_1`.
    pub discrepancy: f64,
    pub tol: f64,
    pub pass: bool,
}

/// The resolvent identity; passes when the discrepancy is at most `5 tol`.
pub fn check_resolvent_identity(
    solver: &ResolventSolver,
    f: &Field,
    lambda1: f64,
    lambda2: f64,
) -> Result<ResolventIdentityReport> {
    if !(lambda1 > 0.0 && lambda1 <= lambda2) {
        return Err(Error::Precondition(format!(
            "need 0 < lambda1 <= lambda2, got ({lambda1}, {lambda2})"
        )));
    }
    let (j2, r2) = solver.solve(f, lambda2)?;
    let ratio = lambda1 / lambda2;
    let mixed = f.combine(ratio, &j2, 1.0 - ratio);
    let (rhs, r1) = solver.solve(&mixed, lambda1)?;
    let tol = r1.tol.max(r2.tol);
    let discrepancy = j2.l1_distance(&rhs);
    Ok(ResolventIdentityReport {
        lambda1,
        lambda2,
        discrepancy,
        tol,
        pass: discrepancy <= 5.0 * tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    /// `max (J_λ f₁ - J_λ f₂)`, nonpositive when order is preserved.
    pub max_violation: f64,
    pub pass: bool,
}

/// Pointwise comparison `f₁ ≤ f₂ ⇒ J_λ f₁ ≤ J_λ f₂ + 1e-8`. A diagnostic:
/// the upwind drift does not guarantee it.
pub fn check_order_preservation(
    solver: &ResolventSolver,
    f1: &Field,
    f2: &Field,
    lambda: f64,
) -> Result<OrderReport> {
    f1.require_same_grid(f2)?;
    if f1.values().iter().zip(f2.values()).any(|(a, b)| a > b) {
        return Err(Error::Precondition("order check needs f1 <= f2 pointwise".into()));
    }
    let (y1, _) = solver.solve(f1, lambda)?;
    let (y2, _) = solver.solve(f2, lambda)?;
    let max_violation = y1
        .values()
        .iter()
        .zip(y2.values())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OrderReport {
        max_violation,
        pass: max_violation <= 1e-8,
    })
}
