//! Finite-volume upwind discretization of `div(V q)` on the periodic grid.

use super::Grid;

/// A velocity field sampled at cell faces (for the fluxes) and cell centres
/// (for particles and the sup norms), with its divergence at the centres.
///
/// Face `i + 1/2` along axis `a` sits half a spacing above point `i`.
#[derive(Clone, Debug)]
pub struct SampledDrift {
    grid: Grid,
    faces: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
    divergence: Vec<f64>,
    zero: bool,
}

impl SampledDrift {
    /// `field(x, out)` writes `D(x)` into `out` (length `d`); `div(x)` returns `div D(x)`.
    pub fn sample(
        grid: Grid,
        field: impl Fn(&[f64], &mut [f64]),
        div: impl Fn(&[f64]) -> f64,
    ) -> Self {
        let d = grid.dim();
        let h = grid.spacing();
        let mut faces = vec![vec![0.0; grid.len()]; d];
        let mut centers = vec![vec![0.0; grid.len()]; d];
        let mut divergence = vec![0.0; grid.len()];
        let mut v = [0.0; 3];
        for i in 0..grid.len() {
            let x = grid.point(i);
            field(&x[..d], &mut v[..d]);
            for a in 0..d {
                centers[a][i] = v[a];
            }
            divergence[i] = div(&x[..d]);
            for a in 0..d {
                let mut xf = x;
                xf[a] += 0.5 * h;
                field(&xf[..d], &mut v[..d]);
                faces[a][i] = v[a];
            }
        }
        let zero = faces.iter().chain(&centers).all(|c| c.iter().all(|&v| v == 0.0));
        SampledDrift {
            grid,
            faces,
            centers,
            divergence,
            zero,
        }
    }

    pub fn zero(grid: Grid) -> Self {
        SampledDrift {
            grid,
            faces: vec![vec![0.0; grid.len()]; grid.dim()],
            centers: vec![vec![0.0; grid.len()]; grid.dim()],
            divergence: vec![0.0; grid.len()],
            zero: true,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Component `axis` of `D` at the cell centres.
    pub fn center_component(&self, axis: usize) -> &[f64] {
        &self.centers[axis]
    }

    pub fn divergence_at_centers(&self) -> &[f64] {
        &self.divergence
    }

    /// `sup |D|` over centres and faces.
    pub fn sup_speed(&self) -> f64 {
        let d = self.grid.dim();
        let speed = |src: &Vec<Vec<f64>>, i: usize| {
            (0..d).map(|a| src[a][i] * src[a][i]).sum::<f64>().sqrt()
        };
        (0..self.grid.len())
            .map(|i| speed(&self.centers, i).max(speed(&self.faces, i)))
            .fold(0.0, f64::max)
    }

    /// `sup ((div D)^- + |D|)` at the centres.
    pub fn sup_negative_divergence_plus_speed(&self) -> f64 {
        let d = self.grid.dim();
        (0..self.grid.len())
            .map(|i| {
                let speed = (0..d).map(|a| self.centers[a][i].powi(2)).sum::<f64>().sqrt();
                (-self.divergence[i]).max(0.0) + speed
            })
            .fold(0.0, f64::max)
    }

    /// `out = div_h(D q)` with upwind face values `D⁺ q_i - D⁻ q_{i+1}`.
    ///
    /// Each face flux is added to one cell and subtracted from its neighbour,
    /// so `Σ out = 0` up to rounding.
    pub fn divergence_of(&self, q: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.zero {
            return;
        }
        let g = &self.grid;
        let n = g.points_per_axis();
        let inv_h = 1.0 / g.spacing();
        for axis in 0..g.dim() {
            let stride = g.stride(axis);
            let vel = &self.faces[axis];
            for i in 0..q.len() {
                let ia = (i / stride) % n;
                let ip = if ia == n - 1 { i + stride - n * stride } else { i + stride };
                let v = vel[i];
                let flux = if v >= 0.0 { v * q[i] } else { v * q[ip] } * inv_h;
                out[i] += flux;
                out[ip] -= flux;
            }
        }
    }
}
