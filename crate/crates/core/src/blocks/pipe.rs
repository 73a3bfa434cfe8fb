use super::frame::Frame;
use super::profile::{PipeProfile, PROFILE_RADIUS};
use crate::error::{Error, Result};
use crate::geometry::RationalDirection;
use crate::helicity::helicity_fourier_spectral;
use crate::spectral::{dealiased_product, Grid, ScalarField, SpectralField3, SpectralScalar, VectorField3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

fn default_order() -> usize {
    2
}

/// Parameters of an intermittent pipe flow along a rational direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipeSpec {
    pub xi: RationalDirection,
    /// Frequency `λ`; the pipe radius is `1/(4λ)`.
    pub lambda: u32,
    /// Intermittency `r`, with `λr` a positive integer.
    pub r: f64,
    /// Placement index within the `λ^{-1}` sub-cells of a lattice cell.
    #[serde(default)]
    pub shift: [usize; 2],
    /// Extra translation of the pipe axis in the `(ξ', ξ'')` plane.
    #[serde(default)]
    pub offset: [f64; 2],
    /// Potential order `D` (even, at least 2).
    #[serde(default = "default_order")]
    pub order: usize,
    /// Spherical Fourier cutoff; defaults to the grid band `n/2 - 1`.
    #[serde(default)]
    pub band: Option<f64>,
}

impl PipeSpec {
    pub fn new(xi: RationalDirection, lambda: u32, r: f64) -> Self {
        PipeSpec { xi, lambda, r, shift: [0, 0], offset: [0.0, 0.0], order: 2, band: None }
    }

    pub fn with_shift(mut self, shift: [usize; 2]) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_offset(mut self, offset: [f64; 2]) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_band(mut self, band: f64) -> Self {
        self.band = Some(band);
        self
    }
}

/// Periodic arrangement of pipe axes in the plane orthogonal to `ξ`.
#[derive(Clone, Debug)]
pub struct PipeLattice {
    pub frame: Frame,
    /// Lattice frequencies along `ξ'` and `ξ''`; cell sides are their reciprocals.
    pub freq: [i64; 2],
    /// Number of `λ^{-1}` sub-cells per cell side.
    pub sub: [usize; 2],
    /// Axis position `(s_c, t_c)` in the coordinates `s = ξ'·x`, `t = ξ''·x`.
    pub center: [f64; 2],
    pub radius: f64,
    xi1: [f64; 3],
    xi2: [f64; 3],
}

impl PipeLattice {
    pub fn new(spec: &PipeSpec) -> Result<Self> {
        let lam = spec.lambda as f64;
        if spec.lambda == 0 || !spec.lambda.is_power_of_two() {
            return Err(Error::InvalidPipe(format!("lambda must be a power of two, got {}", spec.lambda)));
        }
        if !(spec.r > 0.0 && spec.r <= 1.0) {
            return Err(Error::InvalidPipe(format!("r must lie in (0, 1], got {}", spec.r)));
        }
        let lr = lam * spec.r;
        if (lr - lr.round()).abs() > 1e-9 || lr.round() < 1.0 {
            return Err(Error::InvalidPipe(format!("lambda * r = {lr} is not a positive integer")));
        }
        let lr = lr.round() as i64;
        let frame = Frame::for_direction(spec.xi)?;
        let pick = |den: i64| den * ((lr as f64 / den as f64).round() as i64).max(1);
        let freq = [pick(frame.xi1.den), pick(frame.xi2.den)];
        let sub = [
            ((lam / freq[0] as f64) + 1e-9).floor().max(1.0) as usize,
            ((lam / freq[1] as f64) + 1e-9).floor().max(1.0) as usize,
        ];
        if spec.shift[0] >= sub[0] || spec.shift[1] >= sub[1] {
            return Err(Error::InvalidPipe(format!("shift {:?} outside 0..{:?}", spec.shift, sub)));
        }
        let cell = [1.0 / freq[0] as f64, 1.0 / freq[1] as f64];
        let center = [
            (spec.shift[0] as f64 + 0.5) * cell[0] / sub[0] as f64 + spec.offset[0],
            (spec.shift[1] as f64 + 0.5) * cell[1] / sub[1] as f64 + spec.offset[1],
        ];
        let radius = PROFILE_RADIUS / lam;
        Ok(PipeLattice {
            frame,
            freq,
            sub,
            center,
            radius,
            xi1: frame.xi1.to_f64(),
            xi2: frame.xi2.to_f64(),
        })
    }

    /// `(s, t)` of `x`, relative to the nearest pipe axis.
    pub fn local(&self, x: [f64; 3]) -> [f64; 2] {
        let s = self.xi1[0] * x[0] + self.xi1[1] * x[1] + self.xi1[2] * x[2] - self.center[0];
        let t = self.xi2[0] * x[0] + self.xi2[1] * x[1] + self.xi2[2] * x[2] - self.center[1];
        let wrap = |v: f64, f: i64| {
            let p = 1.0 / f as f64;
            v - p * (v / p).round()
        };
        [wrap(s, self.freq[0]), wrap(t, self.freq[1])]
    }

    pub fn distance_to_axis(&self, x: [f64; 3]) -> f64 {
        let l = self.local(x);
        l[0].hypot(l[1])
    }

    /// Integer wavenumber of the lattice mode `(m₁, m₂)`.
    pub fn mode_vector(&self, m: [i64; 2]) -> [i64; 3] {
        let a = self.frame.xi1;
        let b = self.frame.xi2;
        let fa = m[0] * self.freq[0] / a.den;
        let fb = m[1] * self.freq[1] / b.den;
        [fa * a.num[0] + fb * b.num[0], fa * a.num[1] + fb * b.num[1], fa * a.num[2] + fb * b.num[2]]
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PipeMode {
    pub m: [i64; 2],
    pub k: [i64; 3],
    /// `ϱ̂(k)`
    pub rho: Complex64,
    /// Coefficients of `∂_s Θ` and `∂_t Θ`, where `Δ Θ = ϱ` in the `(s,t)` plane.
    pub ds: Complex64,
    pub dt: Complex64,
}

/// A band-limited intermittent pipe flow `W = ξ ϱ` with potential `U`, `curl U = W`.
///
/// The flow is stored as its lattice Fourier series: only one mode of each `±k`
/// pair is kept. Grid samples are exact samples of that trigonometric polynomial.
#[derive(Clone, Debug)]
pub struct PipeFlow {
    pub spec: PipeSpec,
    pub grid: Grid,
    pub lattice: PipeLattice,
    pub(crate) modes: Vec<PipeMode>,
    profile: PipeProfile,
    band: f64,
    /// Fraction of `∫ϱ²` of the exact compact profile lying beyond the cutoff.
    pub truncation_loss: f64,
    amplitude: f64,
}

/// Builds the pipe flow of `spec`, band-limited for sampling on `grid`.
pub fn make_pipe(spec: &PipeSpec, grid: Grid) -> Result<PipeFlow> {
    let n = grid.n();
    if n < 8 * spec.lambda as usize {
        return Err(Error::Unresolved { n, required: 8.0 * spec.lambda as f64 });
    }
    let band = spec.band.unwrap_or((n / 2 - 1) as f64);
    if band > (n / 2 - 1) as f64 || band <= 0.0 {
        return Err(Error::InvalidPipe(format!("band {band} outside (0, {}]", n / 2 - 1)));
    }
    let lattice = PipeLattice::new(spec)?;
    let profile = PipeProfile::new(spec.order)?;
    let sigma = 1.0 / spec.lambda as f64;
    let [fs, ft] = lattice.freq;
    let m1max = (band / fs as f64).floor() as i64;
    let m2max = (band / ft as f64).floor() as i64;

    let mut cache: HashMap<i64, f64> = HashMap::new();
    let mut modes = Vec::new();
    for m2 in 0..=m2max {
        for m1 in -m1max..=m1max {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            let w = [(m1 * fs) as f64, (m2 * ft) as f64];
            let w2i = (m1 * fs).pow(2) + (m2 * ft).pow(2);
            let w2 = w2i as f64;
            if w2.sqrt() > band + 1e-12 {
                continue;
            }
            let hank = *cache.entry(w2i).or_insert_with(|| profile.hankel(sigma * w2.sqrt()));
            let phase = Complex64::from_polar(1.0, -2.0 * PI * (w[0] * lattice.center[0] + w[1] * lattice.center[1]));
            let rho = phase * ((fs * ft) as f64 * sigma * sigma * hank);
            let theta = rho / (-4.0 * PI * PI * w2);
            let ds = theta * Complex64::new(0.0, 2.0 * PI * w[0]);
            let dt = theta * Complex64::new(0.0, 2.0 * PI * w[1]);
            modes.push(PipeMode { m: [m1, m2], k: lattice.mode_vector([m1, m2]), rho, ds, dt });
        }
    }
    // one-sided storage: ∫ϱ² = 2 ∑ |ϱ̂|²
    let energy: f64 = 2.0 * modes.iter().map(|m| m.rho.norm_sqr()).sum::<f64>();
    if energy <= 0.0 {
        return Err(Error::InvalidPipe("no lattice modes inside the band".into()));
    }
    let exact = (fs * ft) as f64 * sigma * sigma;
    let s = 1.0 / energy.sqrt();
    for m in modes.iter_mut() {
        m.rho *= s;
        m.ds *= s;
        m.dt *= s;
    }
    Ok(PipeFlow {
        spec: spec.clone(),
        grid,
        lattice,
        modes,
        profile,
        band,
        truncation_loss: 1.0 - energy / exact,
        amplitude: s,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PipeValue {
    pub rho: f64,
    pub u: [f64; 3],
}

impl PipeFlow {
    pub fn xi(&self) -> [f64; 3] {
        self.spec.xi.to_f64()
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn mode_count(&self) -> usize {
        2 * self.modes.len()
    }

    fn potential_coefficient(&self, m: &PipeMode) -> [Complex64; 3] {
        let a = self.lattice.xi1;
        let b = self.lattice.xi2;
        [-m.dt * a[0] + m.ds * b[0], -m.dt * a[1] + m.ds * b[1], -m.dt * a[2] + m.ds * b[2]]
    }

    pub fn rho_spectral(&self) -> SpectralScalar {
        let g = self.grid;
        let mut s = SpectralScalar::zeros(g);
        for m in &self.modes {
            let neg = [-m.k[0], -m.k[1], -m.k[2]];
            s.data[g.mode_index(m.k)] += m.rho;
            s.data[g.mode_index(neg)] += m.rho.conj();
        }
        s
    }

    pub fn w_spectral(&self) -> SpectralField3 {
        let r = self.rho_spectral();
        let xi = self.xi();
        let mut out = SpectralField3::zeros(self.grid);
        for c in 0..3 {
            out.comps[c] = r.data.iter().map(|v| v * xi[c]).collect();
        }
        out
    }

    pub fn u_spectral(&self) -> SpectralField3 {
        let g = self.grid;
        let mut out = SpectralField3::zeros(g);
        for m in &self.modes {
            let c = self.potential_coefficient(m);
            let i = g.mode_index(m.k);
            let j = g.mode_index([-m.k[0], -m.k[1], -m.k[2]]);
            for d in 0..3 {
                out.comps[d][i] += c[d];
                out.comps[d][j] += c[d].conj();
            }
        }
        out
    }

    pub fn rho(&self) -> ScalarField {
        self.rho_spectral().to_physical()
    }

    pub fn w(&self) -> VectorField3 {
        self.w_spectral().to_physical()
    }

    pub fn u(&self) -> VectorField3 {
        self.u_spectral().to_physical()
    }

    /// `ϱ` and `U` at arbitrary points, by direct summation of the series.
    pub fn eval_at(&self, pts: &[[f64; 3]]) -> Vec<PipeValue> {
        let m1max = self.modes.iter().map(|m| m.m[0].abs()).max().unwrap_or(0);
        let m2max = self.modes.iter().map(|m| m.m[1]).max().unwrap_or(0);
        let coeffs: Vec<([usize; 2], Complex64, [Complex64; 3])> = self
            .modes
            .iter()
            .map(|m| ([(m.m[0] + m1max) as usize, m.m[1] as usize], m.rho, self.potential_coefficient(m)))
            .collect();
        let lat = &self.lattice;
        pts.par_iter()
            .map(|&x| {
                let s = lat.xi1[0] * x[0] + lat.xi1[1] * x[1] + lat.xi1[2] * x[2];
                let t = lat.xi2[0] * x[0] + lat.xi2[1] * x[1] + lat.xi2[2] * x[2];
                let ea = Complex64::from_polar(1.0, 2.0 * PI * lat.freq[0] as f64 * s);
                let eb = Complex64::from_polar(1.0, 2.0 * PI * lat.freq[1] as f64 * t);
                let mut pa = vec![Complex64::default(); (2 * m1max + 1) as usize];
                let mut pb = vec![Complex64::default(); (m2max + 1) as usize];
                pa[m1max as usize] = Complex64::new(1.0, 0.0);
                for j in 1..=m1max as usize {
                    pa[m1max as usize + j] = pa[m1max as usize + j - 1] * ea;
                    pa[m1max as usize - j] = pa[m1max as usize - j + 1] * ea.conj();
                }
                pb[0] = Complex64::new(1.0, 0.0);
                for j in 1..=m2max as usize {
                    pb[j] = pb[j - 1] * eb;
                }
                let mut v = PipeValue::default();
                for (idx, rho, u) in &coeffs {
                    let e = pa[idx[0]] * pb[idx[1]];
                    v.rho += 2.0 * (rho * e).re;
                    for d in 0..3 {
                        v.u[d] += 2.0 * (u[d] * e).re;
                    }
                }
                v
            })
            .collect()
    }

    /// The exact compactly supported profile (before band limiting), scaled like the
    /// band-limited field.
    pub fn analytic_rho(&self, x: [f64; 3]) -> f64 {
        let d = self.lattice.distance_to_axis(x) * self.spec.lambda as f64;
        self.amplitude * self.profile.eval(d)
    }

    pub fn in_support(&self, x: [f64; 3]) -> bool {
        self.lattice.distance_to_axis(x) < self.lattice.radius
    }

    /// Scale factor applied to the raw lattice coefficients.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn diagnostics(&self) -> PipeDiagnostics {
        pipe_diagnostics(self)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipeDiagnostics {
    /// `‖mean(W⊗W) − ξ⊗ξ‖_F`
    pub mean_ww_error: f64,
    /// `∫ ϱ²`
    pub rho_l2_squared: f64,
    pub rho_mean: f64,
    /// `‖curl U − W‖₂ / ‖W‖₂`
    pub curl_residual: f64,
    /// `‖div W‖₂ / (2π band ‖W‖₂)`
    pub div_residual: f64,
    /// `‖ξ·∇ϱ‖₂ / (2π band ‖ϱ‖₂)`
    pub directional_derivative: f64,
    pub helicity: f64,
    /// `‖P(div(W⊗W))‖₂ / (λ ‖W‖₂²)`
    pub stationarity: f64,
    /// `‖ϱ‖_{L^p} / r^{2/p-1}` for `p = 1, 2, ∞`
    pub lp_ratios: [f64; 3],
    pub truncation_loss: f64,
    pub band: f64,
    pub modes: usize,
}

fn pipe_diagnostics(p: &PipeFlow) -> PipeDiagnostics {
    let g = p.grid;
    let xi = p.xi();
    let rho_s = p.rho_spectral();
    let rho = rho_s.to_physical();
    let len = g.len() as f64;
    let l2sq = rho.data.iter().map(|v| v * v).sum::<f64>() / len;
    let mut ww = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            ww[a][b] = l2sq * xi[a] * xi[b];
        }
    }
    // mean(W⊗W) is formed from the sampled W, not from the identity W = ξϱ
    let w = p.w();
    let mut mean_ww = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            mean_ww[a][b] = w.comps[a].iter().zip(&w.comps[b]).map(|(x, y)| x * y).sum::<f64>() / len;
        }
    }
    let mut err = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            err += (mean_ww[a][b] - xi[a] * xi[b]).powi(2);
        }
    }
    let w_s = w.to_spectral();
    let wn = w_s.l2_norm();
    let curl_u = p.u_spectral().curl();
    let mut diff = 0.0;
    for c in 0..3 {
        diff += curl_u.comps[c].iter().zip(&w_s.comps[c]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    }
    let scale = 2.0 * PI * p.band;
    let div = w_s.divergence().l2_norm() / (scale * wn);
    let grad = rho_s.gradient();
    let mut dd = SpectralScalar::zeros(g);
    for i in 0..g.len() {
        dd.data[i] = grad.comps[0][i] * xi[0] + grad.comps[1][i] * xi[1] + grad.comps[2][i] * xi[2];
    }
    let directional = dd.l2_norm() / (scale * rho_s.l2_norm());
    let helicity = helicity_fourier_spectral(&w_s);
    // div(W⊗W) = ξ (ξ·∇ϱ²), with ϱ² formed without aliasing
    let sq = dealiased_product(&rho_s, &rho_s);
    let sq_grad = sq.gradient();
    let mut f = SpectralField3::zeros(g);
    for i in 0..g.len() {
        let d = sq_grad.comps[0][i] * xi[0] + sq_grad.comps[1][i] * xi[1] + sq_grad.comps[2][i] * xi[2];
        for c in 0..3 {
            f.comps[c][i] = d * xi[c];
        }
    }
    let stationarity = f.leray().l2_norm() / (p.spec.lambda as f64 * wn * wn);
    let r = p.spec.r;
    let l1 = rho.data.iter().map(|v| v.abs()).sum::<f64>() / len;
    let linf = rho.linf_norm();
    PipeDiagnostics {
        mean_ww_error: err.sqrt(),
        rho_l2_squared: l2sq,
        rho_mean: rho_s.data[0].re,
        curl_residual: diff.sqrt() / wn,
        div_residual: div,
        directional_derivative: directional,
        helicity,
        stationarity,
        lp_ratios: [l1 / r, l2sq.sqrt(), linf * r],
        truncation_loss: p.truncation_loss,
        band: p.band,
        modes: p.mode_count(),
    }
}
