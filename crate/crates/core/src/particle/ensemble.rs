use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{stream, RandomStream};
use crate::spectral::Field;

/// Number of independent random streams; fixed so results do not depend on
/// the thread count.
pub const DEFAULT_SHARDS: usize = 64;

/// `N` particles in `R^d`, split into contiguous shards with one random
/// stream each.
#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    pub(crate) d: usize,
    pub(crate) positions: Vec<f64>,
    pub(crate) time: f64,
    pub(crate) seed: u64,
    pub(crate) stream_ids: Vec<u64>,
    pub(crate) streams: Vec<RandomStream>,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row-major `N × d`.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn shards(&self) -> usize {
        self.streams.len()
    }

    /// Particles per shard (the last shard may hold fewer).
    pub(crate) fn shard_len(&self) -> usize {
        self.len().div_ceil(self.streams.len()).max(1)
    }

    /// Coordinate `axis` of every particle.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.positions.iter().skip(axis).step_by(self.d).copied().collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.d)
            .map(|a| self.axis(a).iter().sum::<f64>() / self.len() as f64)
            .collect()
    }

    /// Binary positions plus `checkpoint.json` with the stream positions,
    /// enough to resume bit-for-bit.
    pub fn write_checkpoint(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let bin = dir.join("positions.bin");
        let bytes: Vec<u8> = self.positions.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
        let manifest = CheckpointManifest {
            n: self.len(),
            d: self.d,
            time: self.time,
            seed: self.seed,
            stream_ids: self.stream_ids.clone(),
            word_positions: self.streams.iter().map(|s| s.get_word_pos().to_string()).collect(),
            positions: "positions.bin".into(),
        };
        let json = dir.join("checkpoint.json");
        fs::write(&json, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&json, e))
    }

    pub fn read_checkpoint(dir: &Path) -> Result<Self> {
        let json = dir.join("checkpoint.json");
        let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let m: CheckpointManifest = serde_json::from_str(&text)?;
        let bin = dir.join(&m.positions);
        let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
        if bytes.len() != 8 * m.n * m.d || m.stream_ids.len() != m.word_positions.len() {
            return Err(Error::InvalidInput(format!("inconsistent checkpoint in {}", dir.display())));
        }
        let positions = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let streams = m
            .stream_ids
            .iter()
            .zip(&m.word_positions)
            .map(|(&id, pos)| {
                let pos: u128 = pos
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad stream position {pos:?}")))?;
                let mut s = stream(m.seed, id);
                s.set_word_pos(pos);
                Ok(s)
            })
            .collect::<Result<_>>()?;
        Ok(ParticleEnsemble {
            d: m.d,
            positions,
            time: m.time,
            seed: m.seed,
            stream_ids: m.stream_ids,
            streams,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub n: usize,
    pub d: usize,
    pub time: f64,
    pub seed: u64,
    pub stream_ids: Vec<u64>,
    /// ChaCha word positions, as decimal strings (they are 128-bit).
    pub word_positions: Vec<String>,
    pub positions: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitDiagnostics {
    /// Kolmogorov–Smirnov distance of the axis-0 sample against the
    /// piecewise-linear CDF of the grid density.
    pub ks_statistic: f64,
    /// Asymptotic p-value of the KS statistic.
    pub ks_p_value: f64,
}

/// `N` i.i.d. samples of `u0`: a cell is drawn with probability equal to its
/// mass, then a point uniformly inside it.
pub fn init_ensemble(u0: &Field, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    let ids: Vec<u64> = (0..DEFAULT_SHARDS as u64).collect();
    init_ensemble_with_streams(u0, n, seed, &ids)
}

/// As [`init_ensemble`] with an explicit assignment of stream ids to shards.
pub fn init_ensemble_with_streams(u0: &Field, n: usize, seed: u64, stream_ids: &[u64]) -> Result<ParticleEnsemble> {
    if n == 0 || stream_ids.is_empty() {
        return Err(Error::InvalidInput("need at least one particle and one stream".into()));
    }
    let cumulative = cell_cdf(u0)?;
    let grid = *u0.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let mut ens = ParticleEnsemble {
        d,
        positions: vec![0.0; n * d],
        time: 0.0,
        seed,
        stream_ids: stream_ids.to_vec(),
        streams: stream_ids.iter().map(|&id| stream(seed, id)).collect(),
    };
    let chunk = ens.shard_len() * d;
    let total = *cumulative.last().expect("nonempty grid");
    ens.positions
        .par_chunks_mut(chunk)
        .zip(ens.streams.par_iter_mut())
        .for_each(|(block, rng)| {
            for p in block.chunks_mut(d) {
                let target = rng.random::<f64>() * total;
                let cell = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
                let idx = grid.unravel(cell);
                for (a, x) in p.iter_mut().enumerate() {
                    *x = grid.coordinate(idx[a]) + h * (rng.random::<f64>() - 0.5);
                }
            }
        });
    Ok(ens)
}

/// Cumulative cell masses; rejects densities that are negative beyond rounding.
fn cell_cdf(u0: &Field) -> Result<Vec<f64>> {
    let sup = u0.sup_norm();
    if u0.min() < -1e-10 * sup.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "initial density has negative values down to {:e}",
            u0.min()
        )));
    }
    let mass = u0.mass();
    if !((mass - 1.0).abs() <= 1e-6) {
        return Err(Error::InvalidInput(format!("initial density must have unit mass, got {mass}")));
    }
    let mut acc = 0.0;
    Ok(u0
        .values()
        .iter()
        .map(|&v| {
            acc += v.max(0.0);
            acc
        })
        .collect())
}

/// KS distance of the first coordinate against the axis-0 marginal of `u0`.
pub fn init_diagnostics(u0: &Field, ens: &ParticleEnsemble) -> InitDiagnostics {
    let grid = u0.grid();
    let n_axis = grid.points_per_axis();
    let stride = grid.stride(0);
    let h = grid.spacing();
    let mut marginal = vec![0.0; n_axis];
    for (i, v) in u0.values().iter().enumerate() {
        marginal[(i / stride) % n_axis] += v.max(0.0);
    }
    let total: f64 = marginal.iter().sum();
    let mut edges = vec![0.0; n_axis + 1];
    for i in 0..n_axis {
        edges[i + 1] = edges[i] + marginal[i] / total;
    }
    let lo = grid.coordinate(0) - 0.5 * h;
    let cdf = |x: f64| {
        let s = ((x - lo) / h).clamp(0.0, n_axis as f64);
        let i = (s.floor() as usize).min(n_axis - 1);
        edges[i] + (s - i as f64) * (edges[i + 1] - edges[i])
    };
    let mut xs = ens.axis(0);
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    InitDiagnostics {
        ks_statistic: ks,
        ks_p_value: kolmogorov_tail(ks * m.sqrt()),
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let sum: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * sum).clamp(0.0, 1.0)
}
