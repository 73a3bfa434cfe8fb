use super::field::{SpectralField3, SpectralScalar};
use num_complex::Complex64;
use std::f64::consts::PI;

/// A real trigonometric polynomial kept as a sparse list of modes, for
/// evaluation away from grid points.
///
/// Only one mode of each `±k` pair is stored; evaluation doubles its real part.
/// Nyquist modes are dropped.
#[derive(Clone, Debug)]
pub struct TrigSeries3 {
    mean: [f64; 3],
    modes: Vec<([f64; 3], [Complex64; 3])>,
}

fn upper_half(k: [i64; 3]) -> bool {
    k[2] > 0 || (k[2] == 0 && (k[1] > 0 || (k[1] == 0 && k[0] > 0)))
}

impl TrigSeries3 {
    /// Keeps modes whose largest component exceeds `tol` times the largest coefficient.
    pub fn from_spectral(u: &SpectralField3, tol: f64) -> Self {
        let g = u.grid;
        let big = (0..g.len())
            .map(|i| u.at(i).iter().map(|c| c.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let mut modes = Vec::new();
        for idx in 1..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.mode(idx);
            if !upper_half(k) {
                continue;
            }
            let c = u.at(idx);
            if c.iter().map(|v| v.norm()).fold(0.0, f64::max) > tol * big {
                modes.push(([k[0] as f64, k[1] as f64, k[2] as f64], c));
            }
        }
        let m = u.at(0);
        TrigSeries3 { mean: [m[0].re, m[1].re, m[2].re], modes }
    }

    pub fn from_modes(mean: [f64; 3], modes: Vec<([f64; 3], [Complex64; 3])>) -> Self {
        TrigSeries3 { mean, modes }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = self.mean;
        for (k, c) in &self.modes {
            let (s, co) = (2.0 * PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).sin_cos();
            for d in 0..3 {
                out[d] += 2.0 * (c[d].re * co - c[d].im * s);
            }
        }
        out
    }

    /// Value and Jacobian `J[a][b] = ∂_b u_a`.
    pub fn eval_with_jacobian(&self, x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let mut v = self.mean;
        let mut j = [[0.0; 3]; 3];
        for (k, c) in &self.modes {
            let (s, co) = (2.0 * PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).sin_cos();
            for a in 0..3 {
                let re = c[a].re * co - c[a].im * s;
                let im = c[a].re * s + c[a].im * co;
                v[a] += 2.0 * re;
                for b in 0..3 {
                    j[a][b] -= 2.0 * 2.0 * PI * k[b] * im;
                }
            }
        }
        (v, j)
    }

    /// Derivative series `∂_b` of all components.
    pub fn derivative(&self, b: usize) -> TrigSeries3 {
        let modes = self
            .modes
            .iter()
            .map(|(k, c)| {
                let f = Complex64::new(0.0, 2.0 * PI * k[b]);
                (*k, [c[0] * f, c[1] * f, c[2] * f])
            })
            .collect();
        TrigSeries3 { mean: [0.0; 3], modes }
    }

    /// Upper bound `∑ 2 |c|` on the sup norm.
    pub fn coefficient_sum(&self) -> f64 {
        self.mean.iter().map(|v| v * v).sum::<f64>().sqrt()
            + self
                .modes
                .iter()
                .map(|(_, c)| 2.0 * c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
                .sum::<f64>()
    }
}

/// Scalar counterpart of [`TrigSeries3`].
#[derive(Clone, Debug)]
pub struct TrigSeries {
    mean: f64,
    modes: Vec<([f64; 3], Complex64)>,
}

impl TrigSeries {
    pub fn from_spectral(u: &SpectralScalar, tol: f64) -> Self {
        let g = u.grid;
        let big = u.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        for idx in 1..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.mode(idx);
            if upper_half(k) && u.data[idx].norm() > tol * big {
                modes.push(([k[0] as f64, k[1] as f64, k[2] as f64], u.data[idx]));
            }
        }
        TrigSeries { mean: u.data[0].re, modes }
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let mut out = self.mean;
        for (k, c) in &self.modes {
            let (s, co) = (2.0 * PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).sin_cos();
            out += 2.0 * (c.re * co - c.im * s);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, VectorField3};

    #[test]
    fn interpolates_off_grid() {
        let g = Grid::new(16).unwrap();
        let f = |x: [f64; 3]| {
            [
                (2.0 * PI * (x[0] + 2.0 * x[2])).sin(),
                0.5 + (2.0 * PI * 3.0 * x[1]).cos(),
                (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
            ]
        };
        let s = TrigSeries3::from_spectral(&VectorField3::from_fn(g, f).to_spectral(), 1e-12);
        let x = [0.1234, 0.777, 0.4321];
        let (v, j) = s.eval_with_jacobian(x);
        let e = f(x);
        for d in 0..3 {
            assert!((v[d] - e[d]).abs() < 1e-12);
        }
        let h = 1e-6;
        let xp = [x[0], x[1], x[2] + h];
        let xm = [x[0], x[1], x[2] - h];
        let fd = (f(xp)[0] - f(xm)[0]) / (2.0 * h);
        assert!((j[0][2] - fd).abs() < 1e-6);
    }
}
