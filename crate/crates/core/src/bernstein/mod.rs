//! Bernstein functions `Ψ(r) = ∫_0^∞ (1 - e^{-rt}) μ(dt)` given by their Lévy
//! measure, with the hypothesis checks, jump kernel and subordinator sampler
//! built on top of them.

mod hypotheses;
mod quadrature;
mod sampling;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub use hypotheses::{check_hypotheses, default_probe_grid, HypothesisReport, LogMoment};
pub use quadrature::{DensityFn, QuadratureTable, DEFAULT_NODES, DEFAULT_T_MAX, DEFAULT_T_MIN};
pub use sampling::{sample_subordinator_increment, SubordinatorSampler, DEFAULT_SMALL_JUMP_BUDGET};

/// A single point mass `w δ_t` of an atomic Lévy measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub w: f64,
}

fn default_t_min() -> f64 {
    DEFAULT_T_MIN
}
fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}
fn default_nodes() -> usize {
    DEFAULT_NODES
}

/// The Lévy measure `μ` of a Bernstein function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MeasureDescriptor {
    /// `μ(dt) = s/Γ(1-s) t^{-s-1} dt`, so that `Ψ(r) = r^s`.
    FractionalPower { s: f64 },
    /// Finite sum of point masses; `Ψ(r) = Σ w_i (1 - e^{-r t_i})`.
    AtomicMix { atoms: Vec<Atom> },
    /// Absolutely continuous measure integrated on a log-spaced rule.
    QuadratureDensity {
        density: DensityFn,
        #[serde(default = "default_t_min")]
        t_min: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
}

/// On-disk form of [`BernsteinSpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinSpecFile {
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
    pub measure: MeasureDescriptor,
    pub s_lower: f64,
    pub c_lower: f64,
}

/// A validated Bernstein function with zero killing and zero drift.
///
/// Immutable once built; quadrature tables are shared behind an `Arc` so
/// clones are cheap and can be handed to worker threads.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "BernsteinSpecFile", into = "BernsteinSpecFile")]
pub struct BernsteinSpec {
    measure: MeasureDescriptor,
    s_lower: f64,
    c_lower: f64,
    table: Option<Arc<QuadratureTable>>,
}

impl PartialEq for BernsteinSpec {
    fn eq(&self, other: &Self) -> bool {
        self.measure == other.measure
            && self.s_lower == other.s_lower
            && self.c_lower == other.c_lower
    }
}

impl TryFrom<BernsteinSpecFile> for BernsteinSpec {
    type Error = Error;

    fn try_from(file: BernsteinSpecFile) -> Result<Self> {
        if file.a1 != 0.0 || file.a2 != 0.0 {
            return Err(Error::InvalidInput(format!(
                "only a1 = a2 = 0 is supported (got a1 = {}, a2 = {})",
                file.a1, file.a2
            )));
        }
        BernsteinSpec::new(file.measure, file.s_lower, file.c_lower)
    }
}

impl From<BernsteinSpec> for BernsteinSpecFile {
    fn from(spec: BernsteinSpec) -> Self {
        BernsteinSpecFile {
            a1: 0.0,
            a2: 0.0,
            measure: spec.measure,
            s_lower: spec.s_lower,
            c_lower: spec.c_lower,
        }
    }
}

impl BernsteinSpec {
    pub fn new(measure: MeasureDescriptor, s_lower: f64, c_lower: f64) -> Result<Self> {
        // (1/2, 1) is a hypothesis, reported by `check_hypotheses`.
        if !(s_lower > 0.0 && s_lower < 1.0) {
            return Err(Error::InvalidInput(format!(
                "s_lower must lie in (0, 1), got {s_lower}"
            )));
        }
        if !(c_lower > 0.0 && c_lower.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "c_lower must be positive, got {c_lower}"
            )));
        }
        let table = match &measure {
            MeasureDescriptor::FractionalPower { s } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "fractional power s must lie in (0, 1), got {s}"
                    )));
                }
                None
            }
            MeasureDescriptor::AtomicMix { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidInput("atomic mix needs at least one atom".into()));
                }
                if atoms
                    .iter()
                    .any(|a| !(a.t > 0.0 && a.w > 0.0 && a.t.is_finite() && a.w.is_finite()))
                {
                    return Err(Error::InvalidInput(
                        "atoms need positive finite location and weight".into(),
                    ));
                }
                None
            }
            MeasureDescriptor::QuadratureDensity {
                density,
                t_min,
                t_max,
                nodes,
            } => Some(Arc::new(QuadratureTable::build(
                density, *t_min, *t_max, *nodes,
            )?)),
        };
        Ok(BernsteinSpec {
            measure,
            s_lower,
            c_lower,
            table,
        })
    }

    /// `Ψ(r) = r^s` with `s_lower = s`, `c_lower = 1`.
    pub fn fractional(s: f64) -> Result<Self> {
        BernsteinSpec::new(MeasureDescriptor::FractionalPower { s }, s, 1.0)
    }

    pub fn measure(&self) -> &MeasureDescriptor {
        &self.measure
    }

    pub fn s_lower(&self) -> f64 {
        self.s_lower
    }

    pub fn c_lower(&self) -> f64 {
        self.c_lower
    }

    pub(crate) fn table(&self) -> Option<&QuadratureTable> {
        self.table.as_deref()
    }

    /// `Ψ(r)` for `r ≥ 0`.
    pub fn eval_psi(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::domain("eval_psi", format!("r must be >= 0, got {r}")));
        }
        Ok(self.psi(r))
    }

    /// Unchecked `Ψ(r)`; callers guarantee `r ≥ 0`.
    pub(crate) fn psi(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        match &self.measure {
            MeasureDescriptor::FractionalPower { s } => r.powf(*s),
            MeasureDescriptor::AtomicMix { atoms } => {
                atoms.iter().map(|a| -a.w * (-r * a.t).exp_m1()).sum()
            }
            MeasureDescriptor::QuadratureDensity { .. } => {
                let table = self.table.as_ref().expect("quadrature table is built");
                let t_max = table.t_max();
                table.integrate(|t| -(-r * t).exp_m1(), r, -(-r * t_max).exp_m1())
            }
        }
    }

    /// `m = ∫(1∧t) μ(dt)`.
    pub fn small_jump_mass(&self) -> f64 {
        match &self.measure {
            MeasureDescriptor::FractionalPower { s } => 1.0 / gamma(2.0 - s),
            MeasureDescriptor::AtomicMix { atoms } => {
                atoms.iter().map(|a| a.w * a.t.min(1.0)).sum()
            }
            MeasureDescriptor::QuadratureDensity { .. } => {
                let table = self.table.as_ref().expect("quadrature table is built");
                table.integrate(|t| t.min(1.0), 1.0, 1.0)
            }
        }
    }

    /// Lévy jump density `ν(r) = ∫ (4πt)^{-d/2} e^{-r²/4t} μ(dt)` of the
    /// subordinated Brownian motion in `d` dimensions.
    pub fn levy_jump_density(&self, r: f64, d: usize) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain(
                "levy_jump_density",
                format!("r must be positive and finite, got {r}"),
            ));
        }
        if d == 0 {
            return Err(Error::domain("levy_jump_density", "dimension must be >= 1"));
        }
        let df = d as f64;
        let slice = |t: f64| (4.0 * PI * t).powf(-0.5 * df) * (-r * r / (4.0 * t)).exp();
        Ok(match &self.measure {
            MeasureDescriptor::FractionalPower { s } => {
                fractional_kernel_constant(d, *s) * r.powf(-df - 2.0 * s)
            }
            MeasureDescriptor::AtomicMix { atoms } => atoms.iter().map(|a| a.w * slice(a.t)).sum(),
            MeasureDescriptor::QuadratureDensity { .. } => {
                let table = self.table.as_ref().expect("quadrature table is built");
                table.integrate(slice, 0.0, slice(table.t_max()))
            }
        })
    }
}

/// `c(d, s) = s 4^s Γ(d/2 + s) / (Γ(1-s) π^{d/2})`, the constant of the
/// `(-Δ)^s` jump kernel `c(d, s) |z|^{-d-2s}`.
pub fn fractional_kernel_constant(d: usize, s: f64) -> f64 {
    let df = d as f64;
    s * 4f64.powf(s) * gamma(0.5 * df + s) / (gamma(1.0 - s) * PI.powf(0.5 * df))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom_spec() -> BernsteinSpec {
        BernsteinSpec::new(
            MeasureDescriptor::AtomicMix {
                atoms: vec![Atom { t: 1.0, w: 1.0 }],
            },
            0.75,
            1.0,
        )
        .unwrap()
    }

    fn quad_fractional(s: f64) -> BernsteinSpec {
        BernsteinSpec::new(
            MeasureDescriptor::QuadratureDensity {
                density: DensityFn::Fractional { s },
                t_min: DEFAULT_T_MIN,
                t_max: DEFAULT_T_MAX,
                nodes: DEFAULT_NODES,
            },
            s,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn fractional_power_is_closed_form() {
        let spec = BernsteinSpec::fractional(0.5).unwrap();
        assert_eq!(spec.eval_psi(4.0).unwrap(), 2.0);
        assert_eq!(spec.eval_psi(0.0).unwrap(), 0.0);
    }

    #[test]
    fn atomic_mix_vanishes_at_zero() {
        assert_eq!(atom_spec().eval_psi(0.0).unwrap(), 0.0);
        let v = atom_spec().eval_psi(1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn negative_argument_is_a_domain_error() {
        let spec = BernsteinSpec::fractional(0.75).unwrap();
        assert!(matches!(spec.eval_psi(-1.0), Err(Error::Domain { .. })));
        assert!(spec.eval_psi(f64::NAN).is_err());
    }

    #[test]
    fn quadrature_density_reproduces_fractional_power() {
        let spec = quad_fractional(0.75);
        let v = spec.eval_psi(2.0).unwrap();
        assert!((v - 2f64.powf(0.75)).abs() < 1e-6, "{v}");
        for &r in &[1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3, 1e5] {
            let v = spec.eval_psi(r).unwrap();
            let exact = r.powf(0.75);
            assert!((v - exact).abs() <= 1e-6 * exact.max(1.0), "r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn rejects_drift_and_killing() {
        let file = BernsteinSpecFile {
            a1: 0.1,
            a2: 0.0,
            measure: MeasureDescriptor::FractionalPower { s: 0.75 },
            s_lower: 0.75,
            c_lower: 1.0,
        };
        assert!(BernsteinSpec::try_from(file).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BernsteinSpec::fractional(1.0).is_err());
        assert!(BernsteinSpec::new(MeasureDescriptor::FractionalPower { s: 0.3 }, 1.2, 1.0).is_err());
        assert!(BernsteinSpec::new(MeasureDescriptor::AtomicMix { atoms: vec![] }, 0.75, 1.0).is_err());
        // Density with infinite first moment near zero.
        assert!(BernsteinSpec::new(
            MeasureDescriptor::QuadratureDensity {
                density: DensityFn::PowerLaw { coefficient: 1.0, exponent: 1.0 },
                t_min: 1e-8,
                t_max: 1e8,
                nodes: 400,
            },
            0.75,
            1.0,
        )
        .is_err());
    }

    #[test]
    fn json_round_trip_keeps_variant_tag() {
        let spec = quad_fractional(0.6);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"variant\":\"quadrature_density\""));
        let back: BernsteinSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let parsed: BernsteinSpec = serde_json::from_str(
            r#"{"measure":{"variant":"fractional_power","s":0.75},"s_lower":0.75,"c_lower":1.0}"#,
        )
        .unwrap();
        assert_eq!(parsed.eval_psi(16.0).unwrap(), 8.0);
    }

    /// Brute-force quadrature of the subordination integral for `ν`, done
    /// with a substitution independent of the closed form.
    fn nu_brute_force(r: f64, d: usize, s: f64) -> f64 {
        // u = ln t on a fine uniform grid; the integrand is negligible
        // outside [-60, 60] for the r used here.
        let c = s / gamma(1.0 - s);
        let n = 200_000;
        let (a, b) = (-60.0f64, 60.0f64);
        let du = (b - a) / n as f64;
        (0..=n)
            .map(|i| {
                let u = a + du * i as f64;
                let t = u.exp();
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * (4.0 * PI * t).powf(-0.5 * d as f64)
                    * (-r * r / (4.0 * t)).exp()
                    * c
                    * t.powf(-s - 1.0)
                    * t
                    * du
            })
            .sum()
    }

    #[test]
    fn fractional_kernel_constant_matches_brute_force() {
        for &d in &[1usize, 2, 3] {
            for &s in &[0.55, 0.75, 0.9] {
                for &r in &[0.3, 1.0, 2.5] {
                    let closed = BernsteinSpec::fractional(s).unwrap().levy_jump_density(r, d).unwrap();
                    let brute = nu_brute_force(r, d, s);
                    assert!(
                        (closed - brute).abs() < 1e-9 * brute,
                        "d={d} s={s} r={r}: {closed} vs {brute}"
                    );
                    let quad = quad_fractional(s).levy_jump_density(r, d).unwrap();
                    assert!((quad - brute).abs() < 1e-7 * brute, "quadrature variant {quad} vs {brute}");
                }
            }
        }
    }

    #[test]
    fn jump_density_examples() {
        let spec = BernsteinSpec::fractional(0.75).unwrap();
        assert!(spec.levy_jump_density(1.0, 2).unwrap() > spec.levy_jump_density(2.0, 2).unwrap());
        assert!(spec.levy_jump_density(0.0, 1).is_err());
        assert!(spec.levy_jump_density(-1.0, 1).is_err());
        for d in 1..=3 {
            let near_zero = atom_spec().levy_jump_density(1e-12, d).unwrap();
            let expected = (4.0 * PI).powf(-0.5 * d as f64);
            assert!((near_zero - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn small_jump_mass_closed_form_matches_quadrature() {
        for &s in &[0.55, 0.75, 0.9] {
            let closed = BernsteinSpec::fractional(s).unwrap().small_jump_mass();
            let quad = quad_fractional(s).small_jump_mass();
            // kink of 1∧t at t = 1 limits trapezoid accuracy
            assert!((closed - quad).abs() < 1e-3 * closed, "s={s}: {closed} vs {quad}");
            let expected = s / gamma(1.0 - s) * (1.0 / (1.0 - s) + 1.0 / s);
            assert!((closed - expected).abs() < 1e-12);
        }
    }
}
