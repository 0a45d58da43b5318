//! Multi-axis complex FFTs with a process-wide plan cache.

use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

/// Forward and inverse plans for length `n`; the planner caches them.
fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("FFT planner lock poisoned");
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Handle to the cached plans for one grid. Cheap to clone, `Send + Sync`.
#[derive(Clone)]
pub struct Transform {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

impl Transform {
    pub fn new(grid: Grid) -> Self {
        let (forward, inverse) = plans(grid.points_per_axis());
        Transform {
            grid,
            forward,
            inverse,
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.along_axes(buf, &self.forward);
    }

    /// Inverse transform including the `1/n^d` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.along_axes(buf, &self.inverse);
        let scale = 1.0 / buf.len() as f64;
        buf.par_iter_mut().for_each(|z| *z *= scale);
    }

    fn along_axes(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let g = &self.grid;
        let n = g.points_per_axis();
        assert_eq!(buf.len(), g.len(), "buffer does not match grid");
        let mut lines: Vec<Complex64> = Vec::new();
        for axis in 0..g.dim() {
            let stride = g.stride(axis);
            if stride == 1 {
                process_lines(buf, n, fft);
                continue;
            }
            // gather strided lines into contiguous rows, transform, scatter back
            let block = stride * n;
            lines.resize(buf.len(), Complex64::default());
            lines
                .par_chunks_mut(block)
                .zip(buf.par_chunks(block))
                .for_each(|(dst, src)| {
                    for inner in 0..stride {
                        for k in 0..n {
                            dst[inner * n + k] = src[k * stride + inner];
                        }
                    }
                });
            process_lines(&mut lines, n, fft);
            buf.par_chunks_mut(block)
                .zip(lines.par_chunks(block))
                .for_each(|(dst, src)| {
                    for inner in 0..stride {
                        for k in 0..n {
                            dst[k * stride + inner] = src[inner * n + k];
                        }
                    }
                });
        }
    }
}

fn process_lines(buf: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let lines_per_task = (8192 / n).max(1);
    buf.par_chunks_mut(n * lines_per_task).for_each(|chunk| fft.process(chunk));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let t = Transform::new(g);
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut buf = orig.clone();
        t.forward(&mut buf);
        t.inverse(&mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn separable_mode_lands_in_one_slot() {
        // e^{2πi(x0 + 2 x1)/n} on an 8x8 grid
        let g = Grid::new(2, 8, 1.0).unwrap();
        let t = Transform::new(g);
        let mut buf: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let idx = g.unravel(i);
                let ph = 2.0 * std::f64::consts::PI * (idx[0] + 2 * idx[1]) as f64 / 8.0;
                Complex64::from_polar(1.0, ph)
            })
            .collect();
        t.forward(&mut buf);
        let peak = g.ravel(&[1, 2]);
        for (i, z) in buf.iter().enumerate() {
            let want = if i == peak { 64.0 } else { 0.0 };
            assert!((z.re - want).abs() < 1e-10 && z.im.abs() < 1e-10, "slot {i}: {z}");
        }
    }
}
