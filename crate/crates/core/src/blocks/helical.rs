use super::pipe::{make_pipe, PipeFlow, PipeSpec};
use crate::error::{Error, Result};
use crate::geometry::RationalDirection;
use crate::helicity::helicity_fourier_spectral;
use crate::spectral::{fft2, Grid, ScalarField, VectorField3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A straight pipe along `e₂` deformed by the helical shear `Ψ^±`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelicalSpec {
    pub base: PipeSpec,
    /// Helix frequency `λ_*`.
    pub lambda_star: u32,
    /// `+1` or `-1`.
    pub sign: i8,
}

/// Helical pipe with the angular frequencies `κ = 2πλ`, `κ_* = 2πλ_*`.
///
/// `Ψ^±(x) = (x₁ ∓ A sin κ_*x₂, x₂, x₃ + A cos κ_*x₂)` with `A = 1/κ`,
/// `ℍ = ẽ ϱ∘Ψ` with `ẽ = (∇Ψ)^{-1} e₂ = (±a cos κ_*x₂, 1, a sin κ_*x₂)`, `a = κ_*/κ`,
/// and potential `𝕌 = (∇Ψ)^T (U∘Ψ)`, so that `curl 𝕌 = ℍ`.
#[derive(Clone, Debug)]
pub struct HelicalPipe {
    pub spec: HelicalSpec,
    pub pipe: PipeFlow,
}

fn validate(spec: &HelicalSpec, grid: Grid) -> Result<()> {
    if spec.base.xi != RationalDirection::axis(1) {
        return Err(Error::InvalidPipe("helical pipes are built along e2".into()));
    }
    if spec.sign != 1 && spec.sign != -1 {
        return Err(Error::InvalidPipe(format!("sign must be +1 or -1, got {}", spec.sign)));
    }
    if spec.lambda_star == 0 || !spec.lambda_star.is_power_of_two() {
        return Err(Error::InvalidPipe(format!("lambda_star must be a power of two, got {}", spec.lambda_star)));
    }
    if grid.n() < 8 * spec.base.lambda as usize {
        return Err(Error::Unresolved { n: grid.n(), required: 8.0 * spec.base.lambda as f64 });
    }
    Ok(())
}

/// Builds a helical pipe; requires `λ_* < λ`.
pub fn make_helical(spec: &HelicalSpec, grid: Grid) -> Result<HelicalPipe> {
    if spec.lambda_star >= spec.base.lambda {
        return Err(Error::InvalidPipe(format!(
            "lambda_star = {} must be below lambda = {}",
            spec.lambda_star, spec.base.lambda
        )));
    }
    make_helical_relaxed(spec, grid)
}

/// As [`make_helical`], allowing `λ_* = λ` as used by the initial step.
pub fn make_helical_relaxed(spec: &HelicalSpec, grid: Grid) -> Result<HelicalPipe> {
    validate(spec, grid)?;
    if spec.lambda_star > spec.base.lambda {
        return Err(Error::InvalidPipe("lambda_star exceeds lambda".into()));
    }
    let pipe = make_pipe(&spec.base, grid)?;
    Ok(HelicalPipe { spec: spec.clone(), pipe })
}

/// Grid samples of the helical block.
#[derive(Clone, Debug)]
pub struct HelicalFields {
    pub h: VectorField3,
    pub potential: VectorField3,
    pub e_tilde: VectorField3,
    pub rho_psi: ScalarField,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HelicalDiagnostics {
    pub sign: i8,
    /// `max |det ∇Ψ − 1|`, from the spectral derivative of `Ψ − x`.
    pub det_error: f64,
    /// Expected `ẽ·curl ẽ = ±κ_*³/κ²`.
    pub e_twist_expected: f64,
    /// `max |ẽ·curl ẽ − expected| / |expected|`
    pub e_twist_error: f64,
    /// `(κ/κ_*^{3/2})² ∫ ℍ·curl ℍ`
    pub normalized_helicity: f64,
    /// `‖∇Ψ − Id‖_∞ / (λ_*/λ)` in the operator norm.
    pub deformation_ratio: f64,
    /// `λ · max dist(x, straight support)` over `x` in the support of `ϱ∘Ψ`.
    pub containment: f64,
    /// `‖curl 𝕌 − ℍ‖₂ / ‖ℍ‖₂`
    pub curl_residual: f64,
    /// `‖div ℍ‖₂ / (π n ‖ℍ‖₂)`
    pub div_residual: f64,
    /// `∫ |ℍ|²`
    pub energy: f64,
}

impl HelicalPipe {
    pub fn sign(&self) -> f64 {
        self.spec.sign as f64
    }

    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.spec.base.lambda as f64
    }

    pub fn kappa_star(&self) -> f64 {
        2.0 * PI * self.spec.lambda_star as f64
    }

    pub fn amplitude(&self) -> f64 {
        1.0 / self.kappa()
    }

    /// `a = κ_*/κ = λ_*/λ`
    pub fn tilt(&self) -> f64 {
        self.spec.lambda_star as f64 / self.spec.base.lambda as f64
    }

    pub fn psi(&self, x: [f64; 3]) -> [f64; 3] {
        let th = self.kappa_star() * x[1];
        let a = self.amplitude();
        [x[0] - self.sign() * a * th.sin(), x[1], x[2] + a * th.cos()]
    }

    /// `∇Ψ`, with `J[i][j] = ∂_j Ψ_i`.
    pub fn jacobian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let th = self.kappa_star() * x[1];
        let a = self.tilt();
        [[1.0, -self.sign() * a * th.cos(), 0.0], [0.0, 1.0, 0.0], [0.0, -a * th.sin(), 1.0]]
    }

    pub fn e_tilde(&self, x: [f64; 3]) -> [f64; 3] {
        let th = self.kappa_star() * x[1];
        let a = self.tilt();
        [self.sign() * a * th.cos(), 1.0, a * th.sin()]
    }

    /// `ẽ·curl ẽ`
    pub fn twist(&self) -> f64 {
        self.sign() * self.kappa_star().powi(3) / self.kappa().powi(2)
    }

    /// Factor `(κ/κ_*^{3/2})²` normalizing the helicity of `ℍ` to `±1`.
    pub fn helicity_normalization(&self) -> f64 {
        self.kappa().powi(2) / self.kappa_star().powi(3)
    }

    /// Samples `ϱ∘Ψ` and `U∘Ψ` plane by plane: on each plane `x₂ = const` the
    /// composition is a phase shift of the `(k₁, k₃)` coefficients.
    fn composed(&self) -> (ScalarField, VectorField3) {
        let grid = self.pipe.grid;
        let n = grid.n();
        let u_hat = self.pipe.u_spectral();
        let rho_hat = self.pipe.rho_spectral();
        let active: Vec<(usize, [i64; 3])> = (0..grid.len())
            .filter_map(|i| {
                let k = grid.mode(i);
                let any = rho_hat.data[i].norm_sqr() + (0..3).map(|c| u_hat.comps[c][i].norm_sqr()).sum::<f64>();
                (any > 0.0).then_some((i, k))
            })
            .collect();
        debug_assert!(active.iter().all(|(_, k)| k[1] == 0));
        let lam = self.spec.base.lambda as f64;
        let s = self.sign();
        let planes: Vec<[Vec<f64>; 4]> = (0..n)
            .into_par_iter()
            .map(|j| {
                let th = self.kappa_star() * j as f64 / n as f64;
                let mut bufs = vec![vec![Complex64::default(); n * n]; 4];
                for &(i, k) in &active {
                    let ph = Complex64::from_polar(1.0, (-s * k[0] as f64 * th.sin() + k[2] as f64 * th.cos()) / lam);
                    let a = k[0].rem_euclid(n as i64) as usize;
                    let b = k[2].rem_euclid(n as i64) as usize;
                    bufs[0][a + n * b] += rho_hat.data[i] * ph;
                    for c in 0..3 {
                        bufs[c + 1][a + n * b] += u_hat.comps[c][i] * ph;
                    }
                }
                let mut out: [Vec<f64>; 4] = Default::default();
                for (c, buf) in bufs.iter_mut().enumerate() {
                    fft2(buf, n, true);
                    out[c] = buf.iter().map(|v| v.re).collect();
                }
                out
            })
            .collect();
        let mut rho = ScalarField::zeros(grid);
        let mut u = VectorField3::zeros(grid);
        for (j, p) in planes.iter().enumerate() {
            for b in 0..n {
                for a in 0..n {
                    let idx = grid.index(a, j, b);
                    rho.data[idx] = p[0][a + n * b];
                    for c in 0..3 {
                        u.comps[c][idx] = p[c + 1][a + n * b];
                    }
                }
            }
        }
        (rho, u)
    }

    pub fn fields(&self) -> HelicalFields {
        let grid = self.pipe.grid;
        let (rho_psi, u_psi) = self.composed();
        let e_tilde = VectorField3::from_fn(grid, |x| self.e_tilde(x));
        let h = e_tilde.mul_scalar(&rho_psi);
        let mut potential = VectorField3::zeros(grid);
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let j = self.jacobian(x);
            let v = u_psi.at(idx);
            for a in 0..3 {
                potential.comps[a][idx] = (0..3).map(|b| j[b][a] * v[b]).sum();
            }
        }
        HelicalFields { h, potential, e_tilde, rho_psi }
    }

    pub fn diagnostics(&self) -> HelicalDiagnostics {
        let grid = self.pipe.grid;
        let f = self.fields();
        let disp = VectorField3::from_fn(grid, |x| {
            let p = self.psi(x);
            [p[0] - x[0], 0.0, p[2] - x[2]]
        });
        let ds = disp.to_spectral();
        let grads: Vec<VectorField3> = (0..3)
            .map(|c| {
                let mut sc = crate::spectral::SpectralScalar::zeros(grid);
                sc.data = ds.comps[c].clone();
                sc.gradient().to_physical()
            })
            .collect();
        let det_error = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let mut m = [[0.0; 3]; 3];
                for a in 0..3 {
                    let g = grads[a].at(idx);
                    for b in 0..3 {
                        m[a][b] = g[b] + if a == b { 1.0 } else { 0.0 };
                    }
                }
                let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
                (det - 1.0).abs()
            })
            .reduce(|| 0.0, f64::max);
        let expected = self.twist();
        let twist = f.e_tilde.dot(&f.e_tilde.curl());
        let e_twist_error = twist.data.iter().map(|v| (v - expected).abs()).fold(0.0, f64::max) / expected.abs();
        let hs = f.h.to_spectral();
        let normalized_helicity = self.helicity_normalization() * helicity_fourier_spectral(&hs);
        // ∇Ψ − Id has a single nonzero column, of length a
        let deformation_ratio = (0..grid.n())
            .map(|j| {
                let jac = self.jacobian([0.0, j as f64 / grid.n() as f64, 0.0]);
                (jac[0][1].powi(2) + jac[2][1].powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
            / self.tilt();
        let lat = &self.pipe.lattice;
        let lam = self.spec.base.lambda as f64;
        let containment = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let x = grid.point(idx);
                if lat.distance_to_axis(self.psi(x)) < lat.radius {
                    (lat.distance_to_axis(x) - lat.radius).max(0.0) * lam
                } else {
                    0.0
                }
            })
            .reduce(|| 0.0, f64::max);
        let curl_u = f.potential.to_spectral().curl();
        let hn = hs.l2_norm();
        let mut diff = 0.0;
        for c in 0..3 {
            diff += curl_u.comps[c].iter().zip(&hs.comps[c]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        }
        HelicalDiagnostics {
            sign: self.spec.sign,
            det_error,
            e_twist_expected: expected,
            e_twist_error,
            normalized_helicity,
            deformation_ratio,
            containment,
            curl_residual: diff.sqrt() / hn,
            div_residual: hs.divergence().l2_norm() / (PI * grid.n() as f64 * hn),
            energy: hn * hn,
        }
    }
}
