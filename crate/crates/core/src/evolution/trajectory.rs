use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{write_field, Field, Grid};

/// Per-step bookkeeping; entry 0 describes the initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub min: f64,
    pub sup: f64,
    /// L¹ residual of the resolvent solve that produced this state.
    pub residual: f64,
    pub iterations: usize,
}

/// Snapshots `states[i]` at `times[i]`, plus a ledger entry for every step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub(crate) step: f64,
    pub(crate) times: Vec<f64>,
    pub(crate) steps: Vec<usize>,
    pub(crate) states: Vec<Field>,
    pub(crate) ledger: Vec<LedgerEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub grid: Grid,
    pub step: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<String>,
    pub ledger: Vec<LedgerEntry>,
}

impl Trajectory {
    pub(crate) fn start(u0: Field, step: f64) -> Self {
        let entry = LedgerEntry {
            step: 0,
            time: 0.0,
            mass: u0.mass(),
            min: u0.min(),
            sup: u0.sup_norm(),
            residual: 0.0,
            iterations: 0,
        };
        Trajectory {
            step,
            times: vec![0.0],
            steps: vec![0],
            states: vec![u0],
            ledger: vec![entry],
        }
    }

    pub(crate) fn record(&mut self, k: usize, state: &Field, residual: f64, iterations: usize, keep: bool) {
        let time = k as f64 * self.step;
        self.ledger.push(LedgerEntry {
            step: k,
            time,
            mass: state.mass(),
            min: state.min(),
            sup: state.sup_norm(),
            residual,
            iterations,
        });
        if keep {
            self.times.push(time);
            self.steps.push(k);
            self.states.push(state.clone());
        }
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Step index of each snapshot.
    pub fn step_indices(&self) -> &[usize] {
        &self.steps
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn initial(&self) -> &Field {
        &self.states[0]
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("trajectory has an initial state")
    }

    /// Number of completed steps.
    pub fn steps_taken(&self) -> usize {
        self.ledger.len() - 1
    }

    /// Whether every step was kept as a snapshot.
    pub fn is_dense(&self) -> bool {
        self.states.len() == self.ledger.len()
    }

    /// Snapshot at step `k`, if it was kept.
    pub fn state_at_step(&self, k: usize) -> Option<&Field> {
        self.steps.binary_search(&k).ok().map(|i| &self.states[i])
    }

    /// `max_k |mass_k - mass_0|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.ledger[0].mass;
        self.ledger.iter().map(|e| (e.mass - m0).abs()).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.ledger.iter().map(|e| e.min).fold(f64::INFINITY, f64::min)
    }

    /// `max_k |u_k|_∞ / (e^{γ t_k} |u_0|_∞)`; at most 1 when the growth bound holds.
    pub fn sup_growth_ratio(&self, gamma: f64) -> f64 {
        let s0 = self.ledger[0].sup;
        if s0 == 0.0 {
            return if self.ledger.iter().all(|e| e.sup == 0.0) { 0.0 } else { f64::INFINITY };
        }
        self.ledger
            .iter()
            .map(|e| e.sup / ((gamma * e.time).exp() * s0))
            .fold(0.0, f64::max)
    }

    /// Snapshot files `state_NNNNN.{bin,json}`, `manifest.json` and `ledger.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut snapshots = Vec::with_capacity(self.states.len());
        for (state, &k) in self.states.iter().zip(&self.steps) {
            let stem = format!("state_{k:05}");
            write_field(state, &dir.join(&stem))?;
            snapshots.push(format!("{stem}.json"));
        }
        let manifest = TrajectoryManifest {
            grid: *self.initial().grid(),
            step: self.step,
            times: self.times.clone(),
            snapshots,
            ledger: self.ledger.clone(),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
        let path = dir.join("ledger.csv");
        fs::write(&path, ledger_csv(&self.ledger)).map_err(|e| Error::io(&path, e))
    }
}

pub fn ledger_csv(ledger: &[LedgerEntry]) -> String {
    let mut out = String::from("step,time,mass,min,sup,residual,iterations\n");
    for e in ledger {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{}\n",
            e.step, e.time, e.mass, e.min, e.sup, e.residual, e.iterations
        ));
    }
    out
}
