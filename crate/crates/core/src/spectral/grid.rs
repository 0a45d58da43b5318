use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    d: usize,
    n: usize,
    box_length: f64,
}

/// Periodic lattice on the torus `[-L/2, L/2)^d` with `n` points per axis.
///
/// Points sit at `x_i = -L/2 + i·L/n`, so the origin is the point with every
/// index equal to `n/2`. Values are stored row-major, last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile", into = "GridFile")]
pub struct Grid {
    d: usize,
    n: usize,
    box_length: f64,
}

impl TryFrom<GridFile> for Grid {
    type Error = Error;
    fn try_from(g: GridFile) -> Result<Self> {
        Grid::new(g.d, g.n, g.box_length)
    }
}

impl From<Grid> for GridFile {
    fn from(g: Grid) -> Self {
        GridFile {
            d: g.d,
            n: g.n,
            box_length: g.box_length,
        }
    }
}

impl Grid {
    pub fn new(d: usize, n: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidInput(format!("grid dimension must be 1, 2 or 3, got {d}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "points per axis must be a power of two >= 2, got {n}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidInput(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Grid { d, n, box_length })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// `spacing^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Total number of points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    /// Per-axis indices of a flat index.
    pub fn unravel(&self, index: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rest = index;
        for axis in (0..self.d).rev() {
            out[axis] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.d).fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of a flat index; unused trailing entries are zero.
    pub fn point(&self, index: usize) -> [f64; 3] {
        let idx = self.unravel(index);
        let mut x = [0.0; 3];
        for axis in 0..self.d {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    pub fn origin_index(&self) -> usize {
        self.ravel(&[self.n / 2; 3])
    }

    /// Signed frequency index `j ∈ [-n/2, n/2)` of FFT slot `i`.
    pub fn frequency(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber `2πj/L` of FFT slot `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.frequency(i) as f64 / self.box_length
    }

    /// `|k|²` at every flat index, in FFT order.
    pub fn wavenumber_squared(&self) -> Vec<f64> {
        let k2: Vec<f64> = (0..self.n).map(|i| self.wavenumber(i).powi(2)).collect();
        (0..self.len())
            .map(|index| {
                let idx = self.unravel(index);
                (0..self.d).map(|a| k2[idx[a]]).sum()
            })
            .collect()
    }

    /// Flat index of `-k` for each slot, for unpacking two real transforms.
    pub(crate) fn negated_frequencies(&self) -> Vec<usize> {
        (0..self.len())
            .map(|index| {
                let mut idx = self.unravel(index);
                for i in idx.iter_mut().take(self.d) {
                    *i = (self.n - *i) % self.n;
                }
                self.ravel(&idx)
            })
            .collect()
    }

    /// Wrap a coordinate into `[-L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.box_length;
        (x + 0.5 * l).rem_euclid(l) - 0.5 * l
    }
}
