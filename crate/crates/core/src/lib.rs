//! Numerical core for the nonlocal nonlinear Fokker–Planck equation
//!
//! ```text
//! u_t + Ψ(-Δ)β(u) + div(D b(u) u) = 0
//! ```
//!
//! on a periodic box, for Bernstein functions `Ψ`: resolvent solves, implicit
//! Euler (Crandall–Liggett) time stepping, and the McKean–Vlasov jump-particle
//! system whose one-dimensional marginals reproduce the PDE solution.

pub mod bernstein;
pub mod error;
pub mod evolution;
pub mod particle;
pub mod random;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
