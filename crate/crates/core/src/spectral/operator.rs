use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fft::Transform;
use super::Grid;
use crate::bernstein::BernsteinSpec;

/// The symbol `Ψ(|k|²)` on a grid, with the transforms needed to apply
/// functions of it. Build once per (grid, spec) and clone freely.
#[derive(Clone, Debug)]
pub struct PsiOperator {
    grid: Grid,
    transform: Transform,
    symbol: Arc<[f64]>,
    negated: Arc<[usize]>,
}

impl PsiOperator {
    pub fn new(grid: Grid, spec: &BernsteinSpec) -> Self {
        // |k|² = (2π/L)² J for integer J, so evaluate Ψ once per distinct J
        let n = grid.points_per_axis();
        let unit = (2.0 * std::f64::consts::PI / grid.box_length()).powi(2);
        let j2: Vec<usize> = (0..n).map(|i| grid.frequency(i).unsigned_abs().pow(2) as usize).collect();
        let max_j = grid.dim() * (n / 2) * (n / 2);
        let table: Vec<f64> = (0..=max_j)
            .into_par_iter()
            .map(|j| spec.psi(unit * j as f64))
            .collect();
        let symbol: Vec<f64> = (0..grid.len())
            .map(|index| {
                let idx = grid.unravel(index);
                let j: usize = idx[..grid.dim()].iter().map(|&i| j2[i]).sum();
                table[j]
            })
            .collect();
        PsiOperator {
            grid,
            transform: Transform::new(grid),
            symbol: symbol.into(),
            negated: grid.negated_frequencies().into(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `Ψ(|k|²)` in FFT order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    /// `m(Ψ(-Δ)) f` for a real function `m`.
    pub fn apply_fn(&self, f: &[f64], m: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform.forward(&mut buf);
        buf.par_iter_mut()
            .zip(self.symbol.par_iter())
            .for_each(|(z, &psi)| *z *= m(psi));
        self.transform.inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// `Ψ(-Δ) f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.apply_fn(f, |psi| psi)
    }

    /// `(ε + Ψ(-Δ))^{-1} f`.
    pub fn resolvent(&self, eps: f64, f: &[f64]) -> Vec<f64> {
        self.apply_fn(f, |psi| 1.0 / (eps + psi))
    }

    /// Two outputs from two real inputs, one complex transform each way:
    /// `out_0 = m00 a + m01 b`, `out_1 = m10 a + m11 b`, where `m(Ψ)` returns
    /// `[[m00, m01], [m10, m11]]`.
    pub fn mix2(
        &self,
        a: &[f64],
        b: &[f64],
        m: impl Fn(f64) -> [[f64; 2]; 2] + Sync,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.transform.forward(&mut z);
        let i = Complex64::i();
        let mut w = vec![Complex64::default(); z.len()];
        w.par_iter_mut().enumerate().for_each(|(k, wk)| {
            let zk = z[k];
            let zn = z[self.negated[k]].conj();
            let ah = 0.5 * (zk + zn);
            let bh = -0.5 * i * (zk - zn);
            let [[m00, m01], [m10, m11]] = m(self.symbol[k]);
            *wk = (m00 * ah + m01 * bh) + i * (m10 * ah + m11 * bh);
        });
        self.transform.inverse(&mut w);
        w.into_iter().map(|z| (z.re, z.im)).unzip()
    }

    /// Per-mode multiplier given as a function of the flat FFT index.
    #[cfg(test)]
    pub(crate) fn apply_indexed(&self, f: &[f64], m: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform.forward(&mut buf);
        buf.par_iter_mut().enumerate().for_each(|(k, z)| *z *= m(k));
        self.transform.inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }
}
