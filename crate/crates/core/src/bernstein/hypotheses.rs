use serde::{Deserialize, Serialize};

use super::{BernsteinSpec, MeasureDescriptor};
use crate::error::{Error, Result};

/// `∫_1^∞ ln t μ(dt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LogMoment {
    Finite { value: f64 },
    Infinite,
}

impl LogMoment {
    pub fn is_finite(&self) -> bool {
        matches!(self, LogMoment::Finite { .. })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub probes: Vec<f64>,
    pub s_lower: f64,
    pub c_lower: f64,
    /// Whether the declared exponent lies in `(1/2, 1)`.
    pub s_lower_in_range: bool,
    /// `min_r Ψ(r) / r^{s_lower}` over the probes.
    pub lower_bound_min_ratio: f64,
    pub lower_bound_argmin: f64,
    pub lower_bound_pass: bool,
    /// `m = ∫(1∧t) μ(dt)`.
    pub m: f64,
    /// `max_r Ψ(r) / (m (1 + r))`; at most 1 when sublinearity holds.
    pub sublinear_max_ratio: f64,
    pub sublinear_pass: bool,
    pub log_moment: LogMoment,
}

impl HypothesisReport {
    /// Lower bound and sublinearity, the conditions for the PDE theory.
    pub fn pde_hypotheses_pass(&self) -> bool {
        self.s_lower_in_range && self.lower_bound_pass && self.sublinear_pass
    }

    /// Additionally requires the finite log-moment used by the particle picture.
    pub fn all_pass(&self) -> bool {
        self.pde_hypotheses_pass() && self.log_moment.is_finite()
    }
}

/// 81 log-spaced probes on `[1e-4, 1e4]`.
pub fn default_probe_grid() -> Vec<f64> {
    (0..=80).map(|i| 10f64.powf(-4.0 + 0.1 * i as f64)).collect()
}

pub fn check_hypotheses(spec: &BernsteinSpec, probes: &[f64]) -> Result<HypothesisReport> {
    if probes.is_empty() || probes.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidInput(
            "probe grid must be nonempty with positive finite entries".into(),
        ));
    }
    let m = spec.small_jump_mass();
    let mut min_ratio = f64::INFINITY;
    let mut argmin = probes[0];
    let mut sub_max = 0.0f64;
    for &r in probes {
        let psi = spec.psi(r);
        let ratio = psi / r.powf(spec.s_lower);
        if ratio < min_ratio {
            min_ratio = ratio;
            argmin = r;
        }
        sub_max = sub_max.max(psi / (m * (1.0 + r)));
    }

    let log_moment = match spec.measure() {
        MeasureDescriptor::FractionalPower { s } => {
            // s/Γ(1-s) ∫_1^∞ ln t · t^{-1-s} dt = 1/(s Γ(1-s))
            LogMoment::Finite {
                value: 1.0 / (s * statrs::function::gamma::gamma(1.0 - s)),
            }
        }
        MeasureDescriptor::AtomicMix { atoms } => LogMoment::Finite {
            value: atoms
                .iter()
                .filter(|a| a.t > 1.0)
                .map(|a| a.w * a.t.ln())
                .sum(),
        },
        MeasureDescriptor::QuadratureDensity { .. } => {
            let table = spec.table().expect("quadrature table is built");
            let body: f64 = table
                .nodes
                .iter()
                .zip(&table.masses)
                .filter(|(t, _)| **t > 1.0)
                .map(|(t, w)| w * t.ln())
                .sum();
            let value = body + table.right_log_moment;
            if value.is_finite() {
                LogMoment::Finite { value }
            } else {
                LogMoment::Infinite
            }
        }
    };

    Ok(HypothesisReport {
        probes: probes.to_vec(),
        s_lower: spec.s_lower,
        c_lower: spec.c_lower,
        s_lower_in_range: spec.s_lower > 0.5 && spec.s_lower < 1.0,
        lower_bound_min_ratio: min_ratio,
        lower_bound_argmin: argmin,
        lower_bound_pass: min_ratio >= spec.c_lower * (1.0 - 1e-12),
        m,
        sublinear_max_ratio: sub_max,
        sublinear_pass: sub_max <= 1.0 + 1e-12,
        log_moment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{Atom, DensityFn};

    #[test]
    fn fractional_power_passes_everything() {
        let spec = BernsteinSpec::fractional(0.75).unwrap();
        let rep = check_hypotheses(&spec, &default_probe_grid()).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert!((rep.lower_bound_min_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn m_matches_numeric_quadrature_oracle() {
        // Midpoint rule in ln t, split at t = 1 so the kink of 1∧t sits on a cell edge.
        let s = 0.75;
        let c = s / statrs::function::gamma::gamma(1.0 - s);
        let n = 400_000;
        let half = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| -> f64 {
            let du = (b - a) / n as f64;
            (0..n)
                .map(|i| {
                    let t = (a + du * (i as f64 + 0.5)).exp();
                    f(t) * c * t.powf(-s - 1.0) * t * du
                })
                .sum()
        };
        let left = half(-120.0, 0.0, &|t| t);
        let right = half(0.0, 120.0, &|_| 1.0);
        let spec = BernsteinSpec::fractional(s).unwrap();
        let rep = check_hypotheses(&spec, &[1.0]).unwrap();
        assert!((rep.m - (left + right)).abs() < 1e-6, "{} vs {}", rep.m, left + right);
    }

    #[test]
    fn bounded_psi_fails_lower_bound() {
        let spec = BernsteinSpec::new(
            MeasureDescriptor::AtomicMix {
                atoms: vec![Atom { t: 1.0, w: 1.0 }],
            },
            0.75,
            1.0,
        )
        .unwrap();
        let rep = check_hypotheses(&spec, &default_probe_grid()).unwrap();
        assert!(!rep.lower_bound_pass);
        assert!(rep.lower_bound_argmin > 1.0);
        assert!(rep.sublinear_pass);
        assert_eq!(rep.log_moment, LogMoment::Finite { value: 0.0 });
    }

    #[test]
    fn quadrature_log_moment_matches_closed_form() {
        let s = 0.75;
        let spec = BernsteinSpec::new(
            MeasureDescriptor::QuadratureDensity {
                density: DensityFn::Fractional { s },
                t_min: 1e-8,
                t_max: 1e8,
                nodes: 400,
            },
            s,
            1.0,
        )
        .unwrap();
        let rep = check_hypotheses(&spec, &default_probe_grid()).unwrap();
        let exact = 1.0 / (s * statrs::function::gamma::gamma(1.0 - s));
        match rep.log_moment {
            LogMoment::Finite { value } => assert!((value - exact).abs() < 1e-2 * exact, "{value} vs {exact}"),
            LogMoment::Infinite => panic!("expected finite"),
        }
        assert!(rep.sublinear_pass);
    }

    #[test]
    fn exponent_outside_half_one_is_reported() {
        let spec = BernsteinSpec::fractional(0.5).unwrap();
        let rep = check_hypotheses(&spec, &default_probe_grid()).unwrap();
        assert!(rep.lower_bound_pass);
        assert!(!rep.s_lower_in_range);
        assert!(!rep.pde_hypotheses_pass());
    }

    #[test]
    fn rejects_empty_or_nonpositive_probes() {
        let spec = BernsteinSpec::fractional(0.75).unwrap();
        assert!(check_hypotheses(&spec, &[]).is_err());
        assert!(check_hypotheses(&spec, &[1.0, 0.0]).is_err());
    }
}
