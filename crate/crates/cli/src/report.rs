use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use nlfp_core::bernstein::HypothesisReport;
use nlfp_core::spectral::Grid;
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    IsTrue,
}

/// One measured invariant.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::AtMost,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            comparison: Comparison::AtLeast,
            pass: value >= threshold,
        }
    }

    pub fn holds(name: &str, pass: bool) -> Self {
        Check {
            name: name.into(),
            value: f64::from(u8::from(pass)),
            threshold: 1.0,
            comparison: Comparison::IsTrue,
            pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub grid: Option<Grid>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    /// `None` when `λ₀` is infinite.
    pub lambda0: Option<f64>,
    pub gamma: Option<f64>,
    pub hypotheses: HypothesisReport,
    pub checks: Vec<Check>,
    /// Pipeline-specific measurements.
    pub details: serde_json::Map<String, serde_json::Value>,
    pub pass: bool,
}

impl Report {
    pub fn finish(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.details.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.pass { "pass" } else { "FAIL" };
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
                Comparison::IsTrue => "==",
            };
            out.push_str(&format!("{verdict:>4}  {:<28} {:>12.4e} {op} {:.4e}\n", c.name, c.value, c.threshold));
        }
        out
    }
}
