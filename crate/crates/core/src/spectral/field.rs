use super::fft::fft3;
use super::grid::Grid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Real scalar samples on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

/// Real vector samples on a [`Grid`], stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField3 {
    pub grid: Grid,
    pub comps: [Vec<f64>; 3],
}

/// Fourier coefficients of a scalar field, normalized so that `data[0]` is the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalar {
    pub grid: Grid,
    pub data: Vec<Complex64>,
}

/// Fourier coefficients of a vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField3 {
    pub grid: Grid,
    pub comps: [Vec<Complex64>; 3],
}

fn forward(grid: Grid, data: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft3(&mut c, grid.n(), false);
    let s = 1.0 / grid.len() as f64;
    c.iter_mut().for_each(|v| *v *= s);
    c
}

fn inverse_complex(grid: Grid, data: &[Complex64]) -> Vec<Complex64> {
    let mut c = data.to_vec();
    fft3(&mut c, grid.n(), true);
    c
}

fn inverse(grid: Grid, data: &[Complex64]) -> Vec<f64> {
    inverse_complex(grid, data).into_iter().map(|v| v.re).collect()
}

fn check_grid(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(a.n(), b.n()));
    }
    Ok(())
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let data = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        ScalarField { grid, data }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `(∫ f^2)^{1/2}` on the unit torus, by grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_spectral(&self) -> SpectralScalar {
        SpectralScalar { grid: self.grid, data: forward(self.grid, &self.data) }
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        ScalarField { grid: self.grid, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn gradient(&self) -> VectorField3 {
        self.to_spectral().gradient().to_physical()
    }
}

impl VectorField3 {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![0.0; grid.len()];
        VectorField3 { grid, comps: [z.clone(), z.clone(), z] }
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        let vals: Vec<[f64; 3]> = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        Self::from_points(grid, &vals)
    }

    pub fn from_points(grid: Grid, vals: &[[f64; 3]]) -> Self {
        let mut out = Self::zeros(grid);
        for (i, v) in vals.iter().enumerate() {
            for c in 0..3 {
                out.comps[c][i] = v[c];
            }
        }
        out
    }

    pub fn from_components(grid: Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::Format(format!(
                    "component length {} does not match grid {}",
                    c.len(),
                    grid.n()
                )));
            }
        }
        Ok(VectorField3 { grid, comps })
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn to_spectral(&self) -> SpectralField3 {
        let grid = self.grid;
        let comps = [
            forward(grid, &self.comps[0]),
            forward(grid, &self.comps[1]),
            forward(grid, &self.comps[2]),
        ];
        SpectralField3 { grid, comps }
    }

    pub fn add(&self, other: &VectorField3) -> Result<VectorField3> {
        check_grid(self.grid, other.grid)?;
        Ok(self.zip_map(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &VectorField3) -> Result<VectorField3> {
        check_grid(self.grid, other.grid)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    fn zip_map(&self, other: &VectorField3, f: impl Fn(f64, f64) -> f64) -> VectorField3 {
        let comp = |c: usize| -> Vec<f64> {
            self.comps[c].iter().zip(&other.comps[c]).map(|(&a, &b)| f(a, b)).collect()
        };
        VectorField3 { grid: self.grid, comps: [comp(0), comp(1), comp(2)] }
    }

    pub fn scale(&self, s: f64) -> VectorField3 {
        let comp = |c: usize| self.comps[c].iter().map(|v| v * s).collect::<Vec<_>>();
        VectorField3 { grid: self.grid, comps: [comp(0), comp(1), comp(2)] }
    }

    /// Pointwise product with a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> VectorField3 {
        let comp = |c: usize| {
            self.comps[c].iter().zip(&f.data).map(|(a, b)| a * b).collect::<Vec<_>>()
        };
        VectorField3 { grid: self.grid, comps: [comp(0), comp(1), comp(2)] }
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &VectorField3) -> ScalarField {
        let data = (0..self.grid.len())
            .map(|i| {
                self.comps[0][i] * other.comps[0][i]
                    + self.comps[1][i] * other.comps[1][i]
                    + self.comps[2][i] * other.comps[2][i]
            })
            .collect();
        ScalarField { grid: self.grid, data }
    }

    /// Pointwise cross product `self × other`.
    pub fn cross(&self, other: &VectorField3) -> VectorField3 {
        let vals: Vec<[f64; 3]> =
            (0..self.grid.len()).map(|i| cross(self.at(i), other.at(i))).collect();
        VectorField3::from_points(self.grid, &vals)
    }

    pub fn mean(&self) -> [f64; 3] {
        let m = |c: usize| self.comps[c].iter().sum::<f64>() / self.grid.len() as f64;
        [m(0), m(1), m(2)]
    }

    /// `(∫ |u|^2)^{1/2}` on the unit torus.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.comps.iter().flat_map(|c| c.iter()).map(|v| v * v).sum();
        (s / self.grid.len() as f64).sqrt()
    }

    /// Maximum of `|u(x)|` over grid points.
    pub fn linf_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| norm3(self.at(i)))
            .fold(0.0, f64::max)
    }

    pub fn curl(&self) -> VectorField3 {
        self.to_spectral().curl().to_physical()
    }

    pub fn divergence(&self) -> ScalarField {
        self.to_spectral().divergence().to_physical()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.to_spectral().sobolev_norm(s)
    }

    /// Mirror image `x_1 -> -x_1` as a vector field (a pseudo-scalar flips sign).
    pub fn reflect_x(&self) -> VectorField3 {
        let g = self.grid;
        let n = g.n();
        let mut out = VectorField3::zeros(g);
        for idx in 0..g.len() {
            let [i, j, k] = g.unindex(idx);
            let src = g.index((n - i) % n, j, k);
            out.comps[0][idx] = -self.comps[0][src];
            out.comps[1][idx] = self.comps[1][src];
            out.comps[2][idx] = self.comps[2][src];
        }
        out
    }
}

impl SpectralScalar {
    pub fn zeros(grid: Grid) -> Self {
        SpectralScalar { grid, data: vec![Complex64::default(); grid.len()] }
    }

    pub fn to_physical(&self) -> ScalarField {
        ScalarField { grid: self.grid, data: inverse(self.grid, &self.data) }
    }

    pub fn gradient(&self) -> SpectralField3 {
        let g = self.grid;
        let mut out = SpectralField3::zeros(g);
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.mode(idx);
            let v = self.data[idx];
            for c in 0..3 {
                out.comps[c][idx] = Complex64::new(0.0, TWO_PI * k[c] as f64) * v;
            }
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl SpectralField3 {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![Complex64::default(); grid.len()];
        SpectralField3 { grid, comps: [z.clone(), z.clone(), z] }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [Complex64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [Complex64; 3]) {
        for c in 0..3 {
            self.comps[c][idx] = v[c];
        }
    }

    /// Coefficient of wavenumber `k`, zero when `k` is outside the grid band.
    pub fn coefficient(&self, k: [i64; 3]) -> [Complex64; 3] {
        let h = self.grid.n() as i64 / 2;
        if k.iter().any(|&c| c < -h || c >= h) {
            return [Complex64::default(); 3];
        }
        self.at(self.grid.mode_index(k))
    }

    pub fn to_physical(&self) -> VectorField3 {
        let g = self.grid;
        let comps = [inverse(g, &self.comps[0]), inverse(g, &self.comps[1]), inverse(g, &self.comps[2])];
        VectorField3 { grid: g, comps }
    }

    /// Physical samples without discarding the imaginary part.
    pub fn to_physical_complex(&self) -> [Vec<Complex64>; 3] {
        let g = self.grid;
        [
            inverse_complex(g, &self.comps[0]),
            inverse_complex(g, &self.comps[1]),
            inverse_complex(g, &self.comps[2]),
        ]
    }

    /// Multiply every mode by `f(k)`; Nyquist modes are kept as given by `f`.
    pub fn map_modes(&self, f: impl Fn([i64; 3], [Complex64; 3]) -> [Complex64; 3]) -> SpectralField3 {
        let g = self.grid;
        let mut out = SpectralField3::zeros(g);
        for idx in 0..g.len() {
            out.set(idx, f(g.mode(idx), self.at(idx)));
        }
        out
    }

    pub fn curl(&self) -> SpectralField3 {
        let g = self.grid;
        let mut out = SpectralField3::zeros(g);
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.mode(idx);
            let ik = [
                Complex64::new(0.0, TWO_PI * k[0] as f64),
                Complex64::new(0.0, TWO_PI * k[1] as f64),
                Complex64::new(0.0, TWO_PI * k[2] as f64),
            ];
            out.set(idx, ccross(ik, self.at(idx)));
        }
        out
    }

    pub fn divergence(&self) -> SpectralScalar {
        let g = self.grid;
        let mut out = SpectralScalar::zeros(g);
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.mode(idx);
            let u = self.at(idx);
            out.data[idx] = Complex64::new(0.0, TWO_PI)
                * (u[0] * k[0] as f64 + u[1] * k[1] as f64 + u[2] * k[2] as f64);
        }
        out
    }

    /// Periodic Biot–Savart inverse `(-Δ)^{-1} curl`, valid for mean-zero
    /// divergence-free input.
    pub fn curl_inverse(&self) -> Result<SpectralField3> {
        let g = self.grid;
        let mean = self.at(0);
        if mean.iter().any(|c| c.norm() > 1e-12 * (1.0 + self.l2_norm())) {
            return Err(Error::NonzeroMean([mean[0].re, mean[1].re, mean[2].re]));
        }
        let div = self.divergence().l2_norm();
        let scale = (1.0 + self.sobolev_norm(1.0)) * TWO_PI;
        if div > 1e-8 * scale {
            return Err(Error::NotDivergenceFree(div / scale));
        }
        let mut out = SpectralField3::zeros(g);
        for idx in 1..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.mode(idx);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let f = Complex64::new(0.0, TWO_PI) / (4.0 * PI * PI * k2);
            let kc = [
                Complex64::new(k[0] as f64, 0.0),
                Complex64::new(k[1] as f64, 0.0),
                Complex64::new(k[2] as f64, 0.0),
            ];
            let c = ccross(kc, self.at(idx));
            out.set(idx, [c[0] * f, c[1] * f, c[2] * f]);
        }
        Ok(out)
    }

    /// Leray projection onto divergence-free fields; the mean is kept.
    pub fn leray(&self) -> SpectralField3 {
        let g = self.grid;
        let mut out = self.clone();
        for idx in 1..g.len() {
            let k = g.mode(idx);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let u = self.at(idx);
            let kd = (u[0] * k[0] as f64 + u[1] * k[1] as f64 + u[2] * k[2] as f64) / k2;
            for c in 0..3 {
                out.comps[c][idx] = u[c] - kd * k[c] as f64;
            }
        }
        out
    }

    /// `(∑ |û(k)|^2)^{1/2}`, equal to the physical L² norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(∑_{k≠0} |k|^{2s} |û(k)|^2)^{1/2}` with integer wavenumbers.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let g = self.grid;
        let mut acc = 0.0;
        for idx in 1..g.len() {
            let k = g.mode(idx);
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let w = k2.powf(s);
            acc += w * (0..3).map(|c| self.comps[c][idx].norm_sqr()).sum::<f64>();
        }
        acc.sqrt()
    }

    /// Largest `|k|_∞` carrying a coefficient above `tol` (relative to the largest one).
    pub fn band(&self, tol: f64) -> i64 {
        let g = self.grid;
        let big = (0..g.len())
            .map(|i| (0..3).map(|c| self.comps[c][i].norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let mut b = 0;
        for idx in 0..g.len() {
            let m = (0..3).map(|c| self.comps[c][idx].norm()).fold(0.0, f64::max);
            if m > tol * big {
                let k = g.mode(idx);
                b = b.max(k.iter().map(|c| c.abs()).max().unwrap());
            }
        }
        b
    }
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn ccross(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Exact product of two band-limited scalars, formed on a 3/2-padded grid and
/// truncated back to the original band.
pub fn dealiased_product(f: &SpectralScalar, g: &SpectralScalar) -> SpectralScalar {
    let grid = f.grid;
    let n = grid.n();
    let m = 3 * n / 2;
    let pad = |s: &SpectralScalar| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); m * m * m];
        for idx in 0..grid.len() {
            if grid.is_nyquist(idx) {
                continue;
            }
            let k = grid.mode(idx);
            let w = |c: i64| c.rem_euclid(m as i64) as usize;
            out[w(k[0]) + m * (w(k[1]) + m * w(k[2]))] = s.data[idx];
        }
        fft3(&mut out, m, true);
        out
    };
    let a = pad(f);
    let b = pad(g);
    let mut prod: Vec<Complex64> =
        a.iter().zip(&b).map(|(x, y)| Complex64::new(x.re * y.re, 0.0)).collect();
    fft3(&mut prod, m, false);
    let s = 1.0 / (m * m * m) as f64;
    let mut out = SpectralScalar::zeros(grid);
    for idx in 0..grid.len() {
        if grid.is_nyquist(idx) {
            continue;
        }
        let k = grid.mode(idx);
        let w = |c: i64| c.rem_euclid(m as i64) as usize;
        out.data[idx] = prod[w(k[0]) + m * (w(k[1]) + m * w(k[2]))] * s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beltrami(g: Grid) -> VectorField3 {
        VectorField3::from_fn(g, |x| [(TWO_PI * x[2]).sin(), (TWO_PI * x[2]).cos(), 0.0])
    }

    #[test]
    fn beltrami_is_eigenfield_of_curl() {
        let g = Grid::new(16).unwrap();
        let u = beltrami(g);
        let w = u.curl();
        let diff = w.sub(&u.scale(TWO_PI)).unwrap();
        assert!(diff.linf_norm() < 1e-12);
        assert!((u.l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_is_curl_free() {
        let g = Grid::new(16).unwrap();
        let f = ScalarField::from_fn(g, |x| (TWO_PI * (x[0] + 2.0 * x[1])).sin() * (TWO_PI * x[2]).cos());
        let c = f.gradient().curl();
        assert!(c.linf_norm() < 1e-11);
    }

    #[test]
    fn biot_savart_inverts_curl() {
        let g = Grid::new(16).unwrap();
        let u = VectorField3::from_fn(g, |x| {
            [
                (TWO_PI * x[1]).sin() + (TWO_PI * 2.0 * x[2]).cos(),
                (TWO_PI * x[2]).cos(),
                (TWO_PI * x[0]).sin(),
            ]
        });
        let back = u.curl().to_spectral().curl_inverse().unwrap().to_physical();
        assert!(back.sub(&u).unwrap().linf_norm() < 1e-12);
    }

    #[test]
    fn biot_savart_rejects_compressible_input() {
        let g = Grid::new(8).unwrap();
        let u = VectorField3::from_fn(g, |x| [(TWO_PI * x[0]).sin(), 0.0, 0.0]);
        assert!(matches!(u.to_spectral().curl_inverse(), Err(Error::NotDivergenceFree(_))));
    }

    #[test]
    fn dealiased_product_matches_exact_product() {
        let g = Grid::new(8).unwrap();
        let f = ScalarField::from_fn(g, |x| (TWO_PI * 3.0 * x[0]).cos());
        let p = dealiased_product(&f.to_spectral(), &f.to_spectral());
        // cos^2 = 1/2 + cos(6πx)/2; the 6-mode lies outside |k| < 4 and is dropped
        assert!((p.data[0].re - 0.5).abs() < 1e-14);
        let rest: f64 = p.data[1..].iter().map(|v| v.norm()).sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn reflection_reverses_curl_alignment() {
        let g = Grid::new(16).unwrap();
        let u = beltrami(g).add(&VectorField3::from_fn(g, |x| [0.0, (TWO_PI * x[0]).sin(), (TWO_PI * x[0]).cos()])).unwrap();
        let r = u.reflect_x();
        let h = u.dot(&u.curl()).mean();
        let hr = r.dot(&r.curl()).mean();
        assert!((h + hr).abs() < 1e-12);
    }
}
