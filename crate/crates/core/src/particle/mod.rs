//! The McKean–Vlasov jump-particle system and its comparison with the PDE.
//!
//! Particles live on `R^d`; the torus only enters when they are binned.

mod compare;
mod ensemble;
mod kde;
mod mckean;
mod step;

pub use compare::{axis_w1, control_budget, marginal_comparison, metrics_csv, ControlBudget, MarginalMetrics};
pub use ensemble::{
    init_diagnostics, init_ensemble, init_ensemble_with_streams, CheckpointManifest, InitDiagnostics,
    ParticleEnsemble, DEFAULT_SHARDS,
};
pub use kde::{empirical_density, silverman_bandwidth};
pub use mckean::{run_mckean, CouplingMode, McKeanOptions, McKeanReport};
pub use step::{interpolate, step_ensemble};
