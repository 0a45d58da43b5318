//! Log-spaced quadrature for integrals against a Lévy density.
//!
//! Nodes are equispaced in `x = ln t` on `[t_min, t_max]` and the rule is the
//! trapezoid rule in `x`, which is spectrally accurate for the smooth,
//! power-law-tailed densities used here. The two truncated tails are closed by
//! a local power-law fit `m(t) ≈ m(t_edge) (t/t_edge)^p`, so integrals of
//! `f(t) m(t)` pick up `f'(0)·∫_0^{t_min} t m` on the left and
//! `f(∞)·∫_{t_max}^∞ m` on the right.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub const DEFAULT_T_MIN: f64 = 1e-8;
pub const DEFAULT_T_MAX: f64 = 1e8;
pub const DEFAULT_NODES: usize = 400;

/// A nonnegative Lévy density `m(t)` on `(0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityFn {
    /// `s / Γ(1-s) · t^{-1-s}`, the density of the fractional power `r^s`.
    Fractional { s: f64 },
    /// `coefficient · t^{-1-exponent}`.
    PowerLaw { coefficient: f64, exponent: f64 },
    /// `coefficient · t^{-1-exponent} · e^{-rate t}`.
    TemperedStable {
        coefficient: f64,
        exponent: f64,
        rate: f64,
    },
    /// `shape · e^{-rate t} / t`, giving `Ψ(r) = shape · ln(1 + r/rate)`.
    Gamma { shape: f64, rate: f64 },
}

impl DensityFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DensityFn::Fractional { s } => s / gamma(1.0 - s) * t.powf(-1.0 - s),
            DensityFn::PowerLaw {
                coefficient,
                exponent,
            } => coefficient * t.powf(-1.0 - exponent),
            DensityFn::TemperedStable {
                coefficient,
                exponent,
                rate,
            } => coefficient * t.powf(-1.0 - exponent) * (-rate * t).exp(),
            DensityFn::Gamma { shape, rate } => shape * (-rate * t).exp() / t,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = match *self {
            DensityFn::Fractional { s } => s > 0.0 && s < 1.0,
            DensityFn::PowerLaw {
                coefficient,
                exponent,
            } => coefficient > 0.0 && exponent > 0.0 && exponent < 1.0,
            DensityFn::TemperedStable {
                coefficient,
                exponent,
                rate,
            } => coefficient > 0.0 && exponent > 0.0 && exponent < 1.0 && rate > 0.0,
            DensityFn::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "density parameters out of range: {self:?}"
            )))
        }
    }
}

/// Discretized Lévy measure: node masses plus power-law tail closures.
#[derive(Clone, Debug)]
pub struct QuadratureTable {
    pub(crate) nodes: Vec<f64>,
    /// μ-mass carried by each node (`m(t_i) t_i dx`, halved at the ends).
    pub(crate) masses: Vec<f64>,
    /// `∫_0^{t_min} t μ(dt)`.
    pub(crate) left_first_moment: f64,
    /// `∫_0^{t_min} t² μ(dt)`.
    pub(crate) left_second_moment: f64,
    /// `∫_{t_max}^∞ μ(dt)`.
    pub(crate) right_mass: f64,
    /// `∫_{t_max}^∞ ln t μ(dt)`.
    pub(crate) right_log_moment: f64,
    /// Euler–Maclaurin endpoint terms `dx²/12 · m(t) t · (d ln g/dx)` under
    /// the tail models `f ≈ slope·t` (left) and `f ≈ const` (right).
    left_endpoint: f64,
    right_endpoint: f64,
}

fn local_exponent(t0: f64, m0: f64, t1: f64, m1: f64) -> f64 {
    (m1 / m0).ln() / (t1 / t0).ln()
}

impl QuadratureTable {
    pub fn build(density: &DensityFn, t_min: f64, t_max: f64, nodes: usize) -> Result<Self> {
        density.validate()?;
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || nodes < 3 {
            return Err(Error::InvalidInput(format!(
                "quadrature range must satisfy 0 < t_min < t_max with at least 3 nodes, got ({t_min}, {t_max}, {nodes})"
            )));
        }
        let (x0, x1) = (t_min.ln(), t_max.ln());
        let dx = (x1 - x0) / (nodes - 1) as f64;
        let ts: Vec<f64> = (0..nodes).map(|i| (x0 + dx * i as f64).exp()).collect();
        let ms: Vec<f64> = ts.iter().map(|&t| density.eval(t)).collect();
        if ms.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidInput(
                "density must be finite and nonnegative on the quadrature range".into(),
            ));
        }
        let masses: Vec<f64> = ts
            .iter()
            .zip(&ms)
            .enumerate()
            .map(|(i, (&t, &m))| {
                let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
                w * m * t * dx
            })
            .collect();

        let em = dx * dx / 12.0;
        let (left_first_moment, left_second_moment, left_endpoint) = if ms[0] > 0.0 && ms[1] > 0.0
        {
            let p = local_exponent(ts[0], ms[0], ts[1], ms[1]);
            if p <= -2.0 {
                return Err(Error::InvalidInput(format!(
                    "∫(1∧t)μ(dt) diverges at 0 (local exponent {p:.3})"
                )));
            }
            (
                ms[0] * ts[0].powi(2) / (p + 2.0),
                ms[0] * ts[0].powi(3) / (p + 3.0),
                em * (p + 2.0) * ms[0] * ts[0],
            )
        } else {
            (0.0, 0.0, 0.0)
        };

        let (tn, mn) = (ts[nodes - 1], ms[nodes - 1]);
        let (right_mass, right_log_moment, right_endpoint) = if mn > 0.0 && ms[nodes - 2] > 0.0 {
            let p = local_exponent(ts[nodes - 2], ms[nodes - 2], tn, mn);
            if p >= -1.0 {
                return Err(Error::InvalidInput(format!(
                    "∫(1∧t)μ(dt) diverges at ∞ (local exponent {p:.3})"
                )));
            }
            let q = -p - 1.0;
            (
                mn * tn / q,
                mn * tn * (tn.ln() / q + 1.0 / (q * q)),
                em * (p + 1.0) * mn * tn,
            )
        } else {
            (0.0, 0.0, 0.0)
        };

        Ok(QuadratureTable {
            nodes: ts,
            masses,
            left_first_moment,
            left_second_moment,
            right_mass,
            right_log_moment,
            left_endpoint,
            right_endpoint,
        })
    }

    /// `∫ f dμ` where `f(t) ≈ slope_at_zero · t` near zero and
    /// `f(t) → limit_at_infinity` beyond `t_max`.
    pub fn integrate(
        &self,
        f: impl Fn(f64) -> f64,
        slope_at_zero: f64,
        limit_at_infinity: f64,
    ) -> f64 {
        let body: f64 = self
            .nodes
            .iter()
            .zip(&self.masses)
            .map(|(&t, &w)| w * f(t))
            .sum();
        let n = self.nodes.len() - 1;
        let t0 = self.nodes[0];
        let tn = self.nodes[n];
        // trapezoid = exact + dx²/12 (g'(b) - g'(a))
        let f0 = f(t0);
        let endpoint = self.left_endpoint * f0 - self.right_endpoint * f(tn);
        // quadratic term of f on (0, t_min), read off from f(t_min)
        let curvature = (f0 - slope_at_zero * t0) / (t0 * t0);
        body + endpoint
            + slope_at_zero * self.left_first_moment
            + curvature * self.left_second_moment
            + limit_at_infinity * self.right_mass
    }

    pub fn t_max(&self) -> f64 {
        *self.nodes.last().expect("table has nodes")
    }
}
