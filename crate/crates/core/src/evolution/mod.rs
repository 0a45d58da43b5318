//! Implicit Euler (Crandall–Liggett) time stepping, the frozen-coefficient
//! linear equation, and the weak-form check.

mod linearized;
mod mild;
mod trajectory;
mod weak;

pub use linearized::{frozen_coefficient_residuals, solve_linearized_fp, solve_linearized_fp_with, U_FLOOR_REL};
pub use mild::{
    evolve_mild, evolve_with, refinement_study, step_count, sup_l1_distance, EvolveError, EvolveOptions,
    RefinementPair, RefinementReport,
};
pub use trajectory::{ledger_csv, LedgerEntry, Trajectory, TrajectoryManifest};
pub use weak::{weak_form_residual, weak_form_residual_with, TestFunction};
