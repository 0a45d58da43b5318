//! Scenario files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nlfp_core::bernstein::BernsteinSpec;
use nlfp_core::particle::CouplingMode;
use nlfp_core::solver::{CoefficientDescriptor, SolverParams};
use nlfp_core::spectral::{read_field, Field, Grid};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub bernstein: BernsteinSpec,
    pub grid: Grid,
    pub coefficients: CoefficientDescriptor,
    pub initial: InitialCondition,
    pub run: RunBlock,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub verify: VerifyToggles,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Initial densities; every variant is rescaled to `mass`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "unit")]
        mass: f64,
    },
    TwoBumps {
        centers: [Vec<f64>; 2],
        widths: [f64; 2],
        weights: [f64; 2],
        #[serde(default = "unit")]
        mass: f64,
    },
    /// Constant on the box `lower ≤ x < upper`.
    Indicator {
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "unit")]
        mass: f64,
    },
    /// A field sidecar, resolved relative to the scenario file.
    File { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub horizon: f64,
    pub step: f64,
    /// Particle count; 0 skips the particle pipeline.
    #[serde(default)]
    pub particles: usize,
    #[serde(default = "default_mode")]
    pub mode: CouplingMode,
    /// KDE bandwidth; Silverman's rule when absent.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    /// Stored snapshot stride; every step in 1-d, every tenth otherwise, when absent.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Step sizes for `convergence`; `[4h, 2h, h]` when absent.
    #[serde(default)]
    pub refinement: Option<Vec<f64>>,
}

fn default_mode() -> CouplingMode {
    CouplingMode::PdeCoupled
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyToggles {
    pub mass: bool,
    pub positivity: bool,
    pub sup_bound: bool,
    pub contraction: bool,
    pub resolvent_identity: bool,
    pub weak_form: bool,
    pub linearized: bool,
    pub particle_marginals: bool,
}

impl Default for VerifyToggles {
    fn default() -> Self {
        VerifyToggles {
            mass: true,
            positivity: true,
            sup_bound: true,
            contraction: false,
            resolvent_identity: false,
            weak_form: false,
            linearized: false,
            particle_marginals: false,
        }
    }
}

/// Parse JSON, reporting the path of the offending field on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("{}: at `{path}`: {}", origin.display(), e.into_inner())
    })
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config: ScenarioConfig = parse_json(&text, path)?;
    if config.version != CONFIG_VERSION {
        bail!(
            "{}: at `version`: unsupported version {}, expected {CONFIG_VERSION}",
            path.display(),
            config.version
        );
    }
    if let InitialCondition::File { path: p } = &mut config.initial {
        if p.is_relative() {
            *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
        }
    }
    Ok(config)
}

impl InitialCondition {
    pub fn build(&self, grid: Grid) -> Result<Field> {
        let d = grid.dim();
        let check_len = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != d {
                bail!("at `initial.{name}`: expected {d} components, got {}", v.len());
            }
            Ok(())
        };
        let gauss = |x: &[f64], c: &[f64], w: f64| {
            (-x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * w * w)).exp()
        };
        let (raw, mass) = match self {
            InitialCondition::Gaussian { center, width, mass } => {
                check_len("center", center)?;
                if !(*width > 0.0) {
                    bail!("at `initial.width`: must be positive, got {width}");
                }
                (Field::from_fn(grid, |x| gauss(x, center, *width)), *mass)
            }
            InitialCondition::TwoBumps {
                centers,
                widths,
                weights,
                mass,
            } => {
                check_len("centers[0]", &centers[0])?;
                check_len("centers[1]", &centers[1])?;
                if widths.iter().any(|w| !(*w > 0.0)) || weights.iter().any(|w| !(*w >= 0.0)) {
                    bail!("at `initial`: widths must be positive and weights nonnegative");
                }
                let f = Field::from_fn(grid, |x| {
                    weights[0] * gauss(x, &centers[0], widths[0]) + weights[1] * gauss(x, &centers[1], widths[1])
                });
                (f, *mass)
            }
            InitialCondition::Indicator { lower, upper, mass } => {
                check_len("lower", lower)?;
                check_len("upper", upper)?;
                let f = Field::from_fn(grid, |x| {
                    let inside = x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| *a <= *v && *v < *b);
                    if inside { 1.0 } else { 0.0 }
                });
                (f, *mass)
            }
            InitialCondition::File { path } => {
                let f = read_field(path)?;
                if f.grid() != &grid {
                    bail!("at `initial.path`: field grid {:?} does not match the scenario grid {grid:?}", f.grid());
                }
                return Ok(f);
            }
        };
        let total = raw.mass();
        if !(total > 0.0) {
            bail!("at `initial`: the initial density has no mass on the grid");
        }
        if !(mass > 0.0) {
            bail!("at `initial.mass`: must be positive, got {mass}");
        }
        Ok(raw.map(|v| v * mass / total))
    }
}
