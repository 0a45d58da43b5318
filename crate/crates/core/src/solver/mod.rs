//! The nonlinear resolvent `J_λ` and its structural checks.

mod checks;
mod coefficients;
mod resolvent;

pub use checks::{
    check_l1_contraction, check_order_preservation, check_resolvent_identity, ContractionReport,
    OrderReport, ResolventIdentityReport,
};
pub use coefficients::{BPreset, BetaPreset, CoefficientDescriptor, CoefficientSet, DriftPreset};
pub(crate) use resolvent::Closure;
pub use resolvent::{resolvent_step, ResolventSolver, SolverParams, SolverReport, StageReport};
