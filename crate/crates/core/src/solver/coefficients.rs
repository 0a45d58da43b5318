use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SampledDrift};

/// The diffusion nonlinearity `β`: odd, `β(0) = 0`, nondecreasing, Lipschitz.
///
/// The `*_clipped` presets continue linearly beyond `|r| = radius`, which
/// keeps them globally Lipschitz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaPreset {
    /// `r`.
    Linear,
    /// `r + r³`.
    CubicClipped { radius: f64 },
    /// `r + arctan r`.
    ArctanPlus,
    /// `r |r|`; degenerate at zero.
    SignedSquareClipped { radius: f64 },
    /// `r + r|r| / (1 + |r|)`, slope between 1 and 2.
    Rational,
    /// `r |r|^{m-1}`, the porous-medium nonlinearity.
    PorousClipped { exponent: f64, radius: f64 },
}

impl BetaPreset {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            BetaPreset::Linear | BetaPreset::ArctanPlus | BetaPreset::Rational => true,
            BetaPreset::CubicClipped { radius } | BetaPreset::SignedSquareClipped { radius } => {
                radius > 0.0 && radius.is_finite()
            }
            BetaPreset::PorousClipped { exponent, radius } => {
                exponent >= 1.0 && exponent.is_finite() && radius > 0.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("beta parameters out of range: {self:?}")))
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let a = r.abs();
        let odd = |v: f64| v.copysign(r);
        match *self {
            BetaPreset::Linear => r,
            BetaPreset::CubicClipped { radius } => {
                if a <= radius {
                    r + r * r * r
                } else {
                    odd(radius + radius.powi(3) + (1.0 + 3.0 * radius * radius) * (a - radius))
                }
            }
            BetaPreset::ArctanPlus => r + r.atan(),
            BetaPreset::SignedSquareClipped { radius } => {
                if a <= radius {
                    r * a
                } else {
                    odd(radius * radius + 2.0 * radius * (a - radius))
                }
            }
            BetaPreset::Rational => r + r * a / (1.0 + a),
            BetaPreset::PorousClipped { exponent, radius } => {
                if a <= radius {
                    odd(a.powf(exponent))
                } else {
                    odd(radius.powf(exponent)
                        + exponent * radius.powf(exponent - 1.0) * (a - radius))
                }
            }
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let a = r.abs();
        match *self {
            BetaPreset::Linear => 1.0,
            BetaPreset::CubicClipped { radius } => 1.0 + 3.0 * a.min(radius).powi(2),
            BetaPreset::ArctanPlus => 1.0 + 1.0 / (1.0 + r * r),
            BetaPreset::SignedSquareClipped { radius } => 2.0 * a.min(radius),
            BetaPreset::Rational => 2.0 - 1.0 / (1.0 + a).powi(2),
            BetaPreset::PorousClipped { exponent, radius } => {
                exponent * a.min(radius).powf(exponent - 1.0)
            }
        }
    }

    /// `sup_{|r| ≤ m} β'(r)`.
    pub fn lipschitz_on(&self, m: f64) -> f64 {
        let m = m.abs();
        match *self {
            BetaPreset::ArctanPlus => 2.0,
            // every other preset has |β'| nondecreasing in |r|
            _ => self.derivative(m),
        }
    }
}

/// The bounded transport coefficient `b ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BPreset {
    Zero,
    Constant { value: f64 },
    /// `value / (1 + |r| / scale)`.
    Saturating { value: f64, scale: f64 },
}

impl BPreset {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            BPreset::Zero => true,
            BPreset::Constant { value } => value >= 0.0 && value.is_finite(),
            BPreset::Saturating { value, scale } => {
                value >= 0.0 && value.is_finite() && scale > 0.0 && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("b parameters out of range: {self:?}")))
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            BPreset::Zero => 0.0,
            BPreset::Constant { value } => value,
            BPreset::Saturating { value, scale } => value / (1.0 + r.abs() / scale),
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            BPreset::Zero => 0.0,
            BPreset::Constant { value } | BPreset::Saturating { value, .. } => value,
        }
    }
}

/// The vector field `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftPreset {
    Zero,
    Constant { velocity: Vec<f64> },
    /// `D_i(x) = -strength · tanh(x_i)`.
    ConfiningTanh { strength: f64 },
    /// `ω (-x_2, x_1, 0) e^{-|x|²/2σ²}`, divergence free; needs `d ≥ 2`.
    Rotation { omega: f64, sigma: f64 },
}

impl DriftPreset {
    fn validate(&self, d: usize) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            DriftPreset::Zero => Ok(()),
            DriftPreset::Constant { velocity } => {
                if velocity.len() != d || velocity.iter().any(|v| !v.is_finite()) {
                    err(format!("constant drift needs {d} finite components, got {velocity:?}"))
                } else {
                    Ok(())
                }
            }
            DriftPreset::ConfiningTanh { strength } => {
                if strength.is_finite() {
                    Ok(())
                } else {
                    err("tanh drift strength must be finite".into())
                }
            }
            DriftPreset::Rotation { omega, sigma } => {
                if d < 2 {
                    err("rotation drift needs d >= 2".into())
                } else if !omega.is_finite() || !(*sigma > 0.0) || !sigma.is_finite() {
                    err(format!("rotation parameters out of range: omega={omega}, sigma={sigma}"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            DriftPreset::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            DriftPreset::Constant { velocity } => out.copy_from_slice(&velocity[..out.len()]),
            DriftPreset::ConfiningTanh { strength } => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = -strength * xi.tanh();
                }
            }
            DriftPreset::Rotation { omega, sigma } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let env = omega * (-r2 / (2.0 * sigma * sigma)).exp();
                out.iter_mut().for_each(|v| *v = 0.0);
                out[0] = -env * x[1];
                out[1] = env * x[0];
            }
        }
    }

    pub fn divergence(&self, x: &[f64]) -> f64 {
        match self {
            DriftPreset::ConfiningTanh { strength } => {
                x.iter().map(|xi| -strength / xi.cosh().powi(2)).sum()
            }
            _ => 0.0,
        }
    }
}

/// Named nonlinearities and vector field, as they appear in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDescriptor {
    pub beta: BetaPreset,
    pub b: BPreset,
    pub drift: DriftPreset,
}

/// `β`, `b`, `b*(r) = b(r) r` and `D` sampled on a grid, with the derived
/// constants `γ` and `λ₀`.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    descriptor: CoefficientDescriptor,
    grid: Grid,
    drift: SampledDrift,
    gamma: f64,
    lambda0: f64,
}

impl CoefficientSet {
    pub fn new(beta: BetaPreset, b: BPreset, drift: DriftPreset, grid: Grid) -> Result<Self> {
        Self::from_descriptor(CoefficientDescriptor { beta, b, drift }, grid)
    }

    pub fn from_descriptor(descriptor: CoefficientDescriptor, grid: Grid) -> Result<Self> {
        descriptor.beta.validate()?;
        descriptor.b.validate()?;
        descriptor.drift.validate(grid.dim())?;
        let sampled = match &descriptor.drift {
            DriftPreset::Zero => SampledDrift::zero(grid),
            preset => SampledDrift::sample(grid, |x, out| preset.eval(x, out), |x| preset.divergence(x)),
        };
        let spread = sampled.sup_negative_divergence_plus_speed();
        let gamma = 1.0 + spread.sqrt();
        let denom = spread.sqrt() * descriptor.b.sup();
        let lambda0 = if denom > 0.0 { 1.0 / denom } else { f64::INFINITY };
        Ok(CoefficientSet {
            descriptor,
            grid,
            drift: sampled,
            gamma,
            lambda0,
        })
    }

    pub fn descriptor(&self) -> &CoefficientDescriptor {
        &self.descriptor
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn drift(&self) -> &SampledDrift {
        &self.drift
    }

    pub fn beta(&self, r: f64) -> f64 {
        self.descriptor.beta.eval(r)
    }

    pub fn beta_prime(&self, r: f64) -> f64 {
        self.descriptor.beta.derivative(r)
    }

    pub fn b(&self, r: f64) -> f64 {
        self.descriptor.b.eval(r)
    }

    pub fn b_star(&self, r: f64) -> f64 {
        self.descriptor.b.eval(r) * r
    }

    /// `γ = 1 + ||D| + (div D)^-|_∞^{1/2}`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `λ₀ = (|(div D)^- + |D||_∞^{1/2} |b|_∞)^{-1}`, infinite when the product vanishes.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lipschitz_beta(&self, m: f64) -> f64 {
        self.descriptor.beta.lipschitz_on(m)
    }

    /// `β(r)/r`, replaced by `β'(0)` when `|r| < floor`.
    pub fn beta_ratio(&self, r: f64, floor: f64) -> f64 {
        if r.abs() < floor || r == 0.0 {
            self.beta_prime(0.0)
        } else {
            self.beta(r) / r
        }
    }
}
