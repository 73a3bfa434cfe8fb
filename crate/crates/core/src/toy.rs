//! One resolved step of the helicity-prescribing iteration, with trivial cutoffs.
//!
//! [`step0`] builds the initial field `u₁` from energy and helicity profiles;
//! [`perturb`] adds one Reynolds and one helical perturbation to a background
//! and measures the energy and helicity increments against their targets.

use crate::blocks::{make_helical, make_helical_relaxed, make_pipe, HelicalSpec, PipeFlow, PipeSpec};
use crate::error::{Error, Result};
use crate::geometry::{base_set, decompose, frobenius, RationalDirection, Sym3};
use crate::helicity::{helicity_cross, helicity_fourier};
use crate::quad::Composite;
use crate::spectral::{Grid, ScalarField, VectorField3};
use crate::transport::FlowMap;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// A smooth scalar profile of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Sine { mean: f64, amplitude: f64, period: f64 },
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Sine { mean, amplitude, period } => mean + amplitude * (2.0 * PI * t / period).sin(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { .. } => 0.0,
            Profile::Sine { amplitude, period, .. } => amplitude * 2.0 * PI / period * (2.0 * PI * t / period).cos(),
        }
    }

    fn infimum(&self) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Sine { mean, amplitude, .. } => mean - amplitude.abs(),
        }
    }
}

/// Energy profile `e(t) > 0` and helicity profile `h(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePair {
    pub e: Profile,
    pub h: Profile,
}

impl ProfilePair {
    pub fn constant(e: f64, h: f64) -> Self {
        ProfilePair { e: Profile::Constant { value: e }, h: Profile::Constant { value: h } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e.infimum() > 0.0) {
            return Err(Error::InvalidParams("energy profile must stay positive".into()));
        }
        if let Profile::Sine { period, .. } = self.e {
            if !(period > 0.0) {
                return Err(Error::InvalidParams("profile period must be positive".into()));
            }
        }
        if let Profile::Sine { period, .. } = self.h {
            if !(period > 0.0) {
                return Err(Error::InvalidParams("profile period must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Parameters of the toy step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyParams {
    pub n: usize,
    /// Initial-step pipe frequency `λ̄`.
    pub lambda_bar: u32,
    /// Initial-step helix frequency `λ̄_*`.
    pub lambda_bar_star: u32,
    /// Initial-step amplitude `δ`.
    pub delta_bar: f64,
    pub gamma0: f64,
    /// Half width of the time mollifier.
    pub tau_bar: f64,
    pub tau_samples: usize,
    /// Fourier cutoff of the initial helical pipes.
    pub step0_band: f64,
    pub lambda: u32,
    pub lambda_star: u32,
    pub r: f64,
    /// Potential order of the perturbation pipes.
    pub order: usize,
    pub delta: f64,
    pub gamma_prev: f64,
    pub gamma: f64,
    pub helical_band: f64,
    pub placement_trials: usize,
    pub seed: u64,
    /// Relative windows: energy (in units of `δ`), initial helicity gap, helical increment.
    pub energy_window: f64,
    pub gap_window: f64,
    pub helical_window: f64,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams {
            n: 128,
            lambda_bar: 8,
            lambda_bar_star: 8,
            delta_bar: 1.5,
            gamma0: 4.0,
            tau_bar: 0.05,
            tau_samples: 64,
            step0_band: 32.0,
            lambda: 8,
            lambda_star: 2,
            r: 0.125,
            order: 4,
            delta: 0.5,
            gamma_prev: 4.0,
            gamma: 8.0,
            helical_band: 48.0,
            placement_trials: 4000,
            seed: 0,
            energy_window: 0.02,
            gap_window: 0.2,
            helical_window: 0.05,
        }
    }
}

impl ToyParams {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_bar_star > self.lambda_bar {
            return Err(Error::InvalidParams("lambda_bar_star must not exceed lambda_bar".into()));
        }
        if self.lambda_star >= self.lambda {
            return Err(Error::InvalidParams("lambda_star must be below lambda".into()));
        }
        if !(self.gamma > 1.0 && self.gamma0 > 1.0 && self.gamma_prev > 1.0) {
            return Err(Error::InvalidParams("gain factors must exceed 1".into()));
        }
        if !(self.delta > 0.0 && self.delta_bar > 0.0) {
            return Err(Error::InvalidParams("amplitudes must be positive".into()));
        }
        let need = 8 * self.lambda.max(self.lambda_bar) as usize;
        if self.n < need {
            return Err(Error::Unresolved { n: self.n, required: need as f64 });
        }
        if self.step0_smallness() > self.delta_bar / 10.0 {
            return Err(Error::InvalidParams(format!(
                "lambda_bar^2/lambda_bar_star^3 = {} exceeds delta_bar/10",
                self.step0_smallness()
            )));
        }
        Ok(())
    }

    /// `λ̄²/λ̄_*³`
    pub fn step0_smallness(&self) -> f64 {
        (self.lambda_bar as f64).powi(2) / (self.lambda_bar_star as f64).powi(3)
    }
}

/// `𝒫_τ f(t)`: average of `f` against a Gaussian of width `τ/3`, truncated to
/// `(t − τ, t + τ)` and renormalized.
pub fn time_mollify(f: impl Fn(f64) -> f64, t: f64, tau: f64, samples: usize) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParams(format!("mollification width must be positive, got {tau}")));
    }
    if samples < 8 {
        return Err(Error::InvalidParams(format!("need at least 8 time samples, got {samples}")));
    }
    let rule = Composite::new(-tau, tau, samples / 8, 8);
    let sigma = tau / 3.0;
    let weight = |s: f64| (-0.5 * (s / sigma).powi(2)).exp();
    let mass = rule.integrate(weight);
    Ok(rule.integrate(|s| weight(s) * f(t - s)) / mass)
}

/// `h̄_± = 𝒫_τ̄ √((h − ½Γ₀^{-1})_±)`
pub fn step0_amplitudes(profiles: &ProfilePair, p: &ToyParams, t: f64) -> Result<[f64; 2]> {
    let shift = 0.5 / p.gamma0;
    let plus = time_mollify(|s| (profiles.h.eval(s) - shift).max(0.0).sqrt(), t, p.tau_bar, p.tau_samples)?;
    let minus = time_mollify(|s| (shift - profiles.h.eval(s)).max(0.0).sqrt(), t, p.tau_bar, p.tau_samples)?;
    Ok([plus, minus])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Step0Report {
    pub t: f64,
    pub e: f64,
    pub h: f64,
    pub delta: f64,
    pub e_bar: f64,
    pub h_bar_plus: f64,
    pub h_bar_minus: f64,
    pub smallness: f64,
    /// `½‖u₁‖²`
    pub energy_half: f64,
    /// `e − δ/2`
    pub energy_target: f64,
    /// `|½‖u₁‖² − (e − δ/2)| / δ`
    pub energy_error: f64,
    pub helicity: f64,
    /// `h − H(u₁)`
    pub gap: f64,
    /// `½Γ₀^{-1}`
    pub gap_target: f64,
    pub gap_ratio: f64,
    /// `2 H(û_{h,+}, û_{h,−})`
    pub overlap_helicity: f64,
    /// `2 H(û_R, û_{h,+} + û_{h,−})`
    pub reynolds_helical_helicity: f64,
    pub div_residual: f64,
    pub energy_pass: bool,
    pub gap_pass: bool,
}

fn div_residual(u: &VectorField3) -> f64 {
    let norm = u.l2_norm();
    if norm == 0.0 {
        return 0.0;
    }
    u.divergence().l2_norm() / (PI * u.grid.n() as f64 * norm)
}

fn helical_field(spec: &HelicalSpec, grid: Grid, relaxed: bool) -> Result<(VectorField3, f64)> {
    let hp = if relaxed { make_helical_relaxed(spec, grid)? } else { make_helical(spec, grid)? };
    let f = hp.fields();
    let norm = hp.helicity_normalization().sqrt();
    Ok((f.potential.curl().scale(norm), norm))
}

/// Builds `u₁ = û_R + û_{h,+} + û_{h,−}` at time `t`.
///
/// `û_R = ē ϱ̄_R ξ` along `(0,3,4)/5` with `ē = √(2e − δ)`, and
/// `û_{h,±} = (κ̄/κ̄_*^{3/2}) h̄_± ℍ_±` along `e₂`. The three pipes have disjoint supports.
pub fn step0(profiles: &ProfilePair, p: &ToyParams, t: f64) -> Result<(VectorField3, Step0Report)> {
    profiles.validate()?;
    p.validate()?;
    let grid = p.grid()?;
    let e = profiles.e.eval(t);
    let h = profiles.h.eval(t);
    let delta = p.delta_bar;
    if 2.0 * e - delta <= 0.0 {
        return Err(Error::InvalidParams(format!("2e - delta = {} must be positive", 2.0 * e - delta)));
    }
    let e_bar = (2.0 * e - delta).sqrt();
    let [h_plus, h_minus] = step0_amplitudes(profiles, p, t)?;

    let lam = p.lambda_bar;
    let xi_r = RationalDirection::new([0, 3, 4], 5)?;
    let pipe_r = make_pipe(&PipeSpec::new(xi_r, lam, 0.5).with_offset([0.125, 0.0]), grid)?;
    let u_r = pipe_r.w().scale(e_bar);

    let mut u_h = [VectorField3::zeros(grid), VectorField3::zeros(grid)];
    for (i, (sign, amp)) in [(1i8, h_plus), (-1i8, h_minus)].into_iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let base = PipeSpec::new(RationalDirection::axis(1), lam, 0.5).with_band(p.step0_band).with_shift([0, i]);
        let spec = HelicalSpec { base, lambda_star: p.lambda_bar_star, sign };
        let (field, _) = helical_field(&spec, grid, true)?;
        u_h[i] = field.scale(amp);
    }
    let hel = u_h[0].add(&u_h[1])?;
    let u1 = u_r.add(&hel)?;

    let energy_half = 0.5 * u1.l2_norm().powi(2);
    let energy_target = e - 0.5 * delta;
    let energy_error = (energy_half - energy_target).abs() / delta;
    let helicity = helicity_fourier(&u1);
    let gap = h - helicity;
    let gap_target = 0.5 / p.gamma0;
    let gap_ratio = gap / gap_target;
    let overlap_helicity = 2.0 * helicity_cross(&u_h[0], &u_h[1])?;
    let reynolds_helical_helicity = 2.0 * helicity_cross(&u_r, &hel)?;
    let report = Step0Report {
        t,
        e,
        h,
        delta,
        e_bar,
        h_bar_plus: h_plus,
        h_bar_minus: h_minus,
        smallness: p.step0_smallness(),
        energy_half,
        energy_target,
        energy_error,
        helicity,
        gap,
        gap_target,
        gap_ratio,
        overlap_helicity,
        reynolds_helical_helicity,
        div_residual: div_residual(&u1),
        energy_pass: energy_error <= p.energy_window,
        gap_pass: (gap_ratio - 1.0).abs() <= p.gap_window,
    };
    Ok((u1, report))
}

/// Coefficient fields `a_(ξ) = e^{1/2} Γ^j γ_ξ(Id − R/(eΓ^{2j}))` over `Ξ₀`.
#[derive(Clone, Debug)]
pub struct ReynoldsCoefficients {
    pub directions: Vec<[f64; 3]>,
    pub fields: Vec<ScalarField>,
    /// `P = eΓ^{2j}`
    pub level: f64,
    /// `max |R/(eΓ^{2j})|` in the Frobenius norm.
    pub cone_load: f64,
}

/// Evaluates the coefficient functions at every grid point of the stress field `r`.
pub fn reynolds_coefficients(grid: Grid, r: &[Sym3], e: f64, gamma_2j: f64) -> Result<ReynoldsCoefficients> {
    if r.len() != grid.len() {
        return Err(Error::GridMismatch(r.len(), grid.len()));
    }
    if !(e > 0.0 && gamma_2j > 0.0) {
        return Err(Error::InvalidParams("energy level and gain must be positive".into()));
    }
    let level = e * gamma_2j;
    let dirs = base_set().xi_f64();
    let mut fields = vec![ScalarField::zeros(grid); 6];
    let mut cone_load: f64 = 0.0;
    for (idx, rr) in r.iter().enumerate() {
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] = (if a == b { 1.0 } else { 0.0 }) - rr[a][b] / level;
            }
        }
        cone_load = cone_load.max(frobenius(rr) / level);
        let dec = decompose(&m).map_err(|err| match err {
            Error::OutOfCone { direction, coefficient } => {
                Error::ConeViolation { index: idx, point: grid.point(idx), direction, coefficient }
            }
            other => other,
        })?;
        for (f, g2) in fields.iter_mut().zip(dec.coefficients) {
            f.data[idx] = (level * g2).sqrt();
        }
    }
    Ok(ReynoldsCoefficients { directions: dirs, fields, level, cone_load })
}

/// `max_x |Σ_ξ a_ξ² ξ⊗ξ − (P Id − R)|` in the Frobenius norm.
pub fn oscillation_cancellation_check(coeffs: &ReynoldsCoefficients, r: &[Sym3]) -> f64 {
    let mut worst: f64 = 0.0;
    for (idx, rr) in r.iter().enumerate() {
        let mut d = [[0.0; 3]; 3];
        for (xi, f) in coeffs.directions.iter().zip(&coeffs.fields) {
            let a2 = f.data[idx] * f.data[idx];
            for a in 0..3 {
                for b in 0..3 {
                    d[a][b] += a2 * xi[a] * xi[b];
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                d[a][b] -= (if a == b { coeffs.level } else { 0.0 }) - rr[a][b];
            }
        }
        worst = worst.max(frobenius(&d));
    }
    worst
}

/// `h_{q+1} = √((h − H)(1 − Γ_prev/(2Γ_cur)))`
pub fn helical_amplitude(h_target: f64, h_current: f64, gamma_prev: f64, gamma_cur: f64) -> Result<f64> {
    let gap = h_target - h_current;
    if !(gap > 0.0) {
        return Err(Error::InvalidParams(format!("helicity gap {gap:e} must be positive")));
    }
    if !(gamma_cur > 0.0 && gamma_prev > 0.0 && gamma_prev < 2.0 * gamma_cur) {
        return Err(Error::InvalidParams("gains must satisfy 0 < gamma_prev < 2 gamma_cur".into()));
    }
    Ok((gap * (1.0 - gamma_prev / (2.0 * gamma_cur))).sqrt())
}

/// `w^{(p)} = a curl V`, `w^{(c)} = ∇a × V`, and the curl form `w = curl(aV)`.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub principal: VectorField3,
    pub corrector: VectorField3,
    pub total: VectorField3,
    /// `‖w^{(p)} + w^{(c)} − w‖₂ / ‖w‖₂`
    pub identity_residual: f64,
    pub div_residual: f64,
    pub mean: [f64; 3],
}

pub fn assemble_perturbation(a: &ScalarField, potential: &VectorField3) -> Result<Assembly> {
    let grid = a.grid;
    if potential.grid != grid {
        return Err(Error::GridMismatch(a.grid.n(), potential.grid.n()));
    }
    let ab = scalar_band(a);
    let vb = potential.to_spectral().band(1e-14);
    let limit = (grid.n() / 2 - 1) as i64;
    if ab + vb > limit {
        return Err(Error::Unresolved { n: grid.n(), required: 2.0 * (ab + vb + 1) as f64 });
    }
    let principal = potential.curl().mul_scalar(a);
    let corrector = a.gradient().cross(potential);
    let total = potential.mul_scalar(a).curl();
    let sum = principal.add(&corrector)?;
    let norm = total.l2_norm();
    let identity_residual = if norm > 0.0 { sum.sub(&total)?.l2_norm() / norm } else { sum.l2_norm() };
    let div_residual = div_residual(&total);
    let mean = total.mean();
    Ok(Assembly { principal, corrector, total, identity_residual, div_residual, mean })
}

fn scalar_band(a: &ScalarField) -> i64 {
    let s = a.to_spectral();
    let big = s.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut b = 0;
    for (idx, c) in s.data.iter().enumerate() {
        if c.norm() > 1e-14 * big {
            b = b.max(a.grid.mode(idx).iter().map(|v| v.abs()).max().unwrap());
        }
    }
    b
}

/// `∇Φ^T (U∘Φ)`, the potential of the pipe transported by the flow.
pub fn transported_potential(pipe: &PipeFlow, flow: &FlowMap) -> Result<VectorField3> {
    if pipe.grid != flow.grid {
        return Err(Error::GridMismatch(pipe.grid.n(), flow.grid.n()));
    }
    let vals = pipe.eval_at(&flow.phi);
    let pts: Vec<[f64; 3]> = vals
        .iter()
        .zip(&flow.grad)
        .map(|(v, g)| {
            let mut out = [0.0; 3];
            for (a, o) in out.iter_mut().enumerate() {
                *o = (0..3).map(|b| g[b][a] * v.u[b]).sum();
            }
            out
        })
        .collect();
    Ok(VectorField3::from_points(flow.grid, &pts))
}

/// Energy and helicity increments of `u → u + w`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IncrementReport {
    /// `½‖u+w‖² − ½‖u‖²`
    pub energy_increment: f64,
    pub energy_target: f64,
    /// `H(u+w) − H(u)`
    pub helicity_increment: f64,
    pub helicity_target: f64,
    /// `H(u, w)`
    pub cross_helicity: f64,
}

pub fn increment_report(u: &VectorField3, w: &VectorField3, energy_target: f64, helicity_target: f64) -> Result<IncrementReport> {
    let uw = u.add(w)?;
    Ok(IncrementReport {
        energy_increment: 0.5 * (uw.l2_norm().powi(2) - u.l2_norm().powi(2)),
        energy_target,
        helicity_increment: helicity_fourier(&uw) - helicity_fourier(u),
        helicity_target,
        cross_helicity: helicity_cross(u, w)?,
    })
}

/// Fraction of `Σ|ŵ(k)|²` carried by `|k| < lo` or `|k| > hi`.
pub fn spectral_mass_outside(w: &VectorField3, lo: f64, hi: f64) -> f64 {
    let s = w.to_spectral();
    let g = w.grid;
    let (mut out, mut total) = (0.0, 0.0);
    for idx in 0..g.len() {
        let k = g.mode(idx);
        let r = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
        let m: f64 = (0..3).map(|c| s.comps[c][idx].norm_sqr()).sum();
        total += m;
        if r < lo || r > hi {
            out += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        out / total
    }
}

/// `u = A (sin 2πx₃, cos 2πx₃, 0)`, with `curl u = 2π u`.
pub fn beltrami_background(grid: Grid, amplitude: f64) -> VectorField3 {
    VectorField3::from_fn(grid, |x| {
        let z = 2.0 * PI * x[2];
        [amplitude * z.sin(), amplitude * z.cos(), 0.0]
    })
}

/// Result of the pipe placement search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Placement {
    pub offsets: Vec<[f64; 2]>,
    /// `Σ_{i<j} a_i a_j (ξ_i·ξ_j) ∫ϱ_iϱ_j` at the chosen offsets.
    pub cross_energy: f64,
    /// Same quantity at zero offsets.
    pub cross_energy_unplaced: f64,
    pub objective: f64,
}

struct PairTerms {
    i: usize,
    j: usize,
    weight: f64,
    // (c_i conj c_j, phase vector of i, phase vector of j)
    terms: Vec<(Complex64, [f64; 2], [f64; 2])>,
}

fn full_modes(p: &PipeFlow) -> HashMap<[i64; 3], (Complex64, [f64; 2])> {
    let [fs, ft] = p.lattice.freq;
    let mut out = HashMap::new();
    for m in &p.modes {
        let ph = [(m.m[0] * fs) as f64, (m.m[1] * ft) as f64];
        out.insert(m.k, (m.rho, ph));
        out.insert([-m.k[0], -m.k[1], -m.k[2]], (m.rho.conj(), [-ph[0], -ph[1]]));
    }
    out
}

fn pair_value(t: &PairTerms, off: &[[f64; 2]]) -> f64 {
    let (oi, oj) = (off[t.i], off[t.j]);
    let s: f64 = t
        .terms
        .iter()
        .map(|(c, pi, pj)| {
            let arg = pi[0] * oi[0] + pi[1] * oi[1] - pj[0] * oj[0] - pj[1] * oj[1];
            (c * Complex64::from_polar(1.0, -2.0 * PI * arg)).re
        })
        .sum();
    t.weight * s
}

fn objective(pairs: &[PairTerms], off: &[[f64; 2]]) -> f64 {
    pairs.iter().map(|t| pair_value(t, off).powi(2)).sum()
}

/// Chooses axis offsets for pipes of weights `a_i` that minimize the squared pairwise
/// cross energies; random search followed by coordinate refinement.
pub fn place_pipes(pipes: &[PipeFlow], weights: &[f64], trials: usize, seed: u64) -> Placement {
    let tables: Vec<_> = pipes.iter().map(full_modes).collect();
    let mut pairs = Vec::new();
    for i in 0..pipes.len() {
        for j in i + 1..pipes.len() {
            let dot: f64 = (0..3).map(|c| pipes[i].xi()[c] * pipes[j].xi()[c]).sum();
            let mut terms = Vec::new();
            for (k, (ci, pi)) in &tables[i] {
                if let Some((cj, pj)) = tables[j].get(k) {
                    terms.push((ci * cj.conj(), *pi, *pj));
                }
            }
            if !terms.is_empty() && dot.abs() > 1e-14 {
                pairs.push(PairTerms { i, j, weight: weights[i] * weights[j] * dot, terms });
            }
        }
    }
    let periods: Vec<[f64; 2]> =
        pipes.iter().map(|p| [1.0 / p.lattice.freq[0] as f64, 1.0 / p.lattice.freq[1] as f64]).collect();
    let zero = vec![[0.0; 2]; pipes.len()];
    let cross = |off: &[[f64; 2]]| pairs.iter().map(|t| pair_value(t, off)).sum::<f64>();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = zero.clone();
    let mut best_val = objective(&pairs, &best);
    for _ in 0..trials {
        let cand: Vec<[f64; 2]> = periods.iter().map(|p| [rng.gen::<f64>() * p[0], rng.gen::<f64>() * p[1]]).collect();
        let v = objective(&pairs, &cand);
        if v < best_val {
            best_val = v;
            best = cand;
        }
    }
    let mut step: Vec<[f64; 2]> = periods.iter().map(|p| [p[0] / 16.0, p[1] / 16.0]).collect();
    for _ in 0..400 {
        let mut moved = false;
        for i in 0..pipes.len() {
            for c in 0..2 {
                for dir in [1.0, -1.0] {
                    let mut cand = best.clone();
                    cand[i][c] = (cand[i][c] + dir * step[i][c]).rem_euclid(periods[i][c]);
                    let v = objective(&pairs, &cand);
                    if v < best_val {
                        best_val = v;
                        best = cand;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            for s in step.iter_mut() {
                s[0] *= 0.5;
                s[1] *= 0.5;
            }
            if step.iter().zip(&periods).all(|(s, p)| s[0] < 1e-9 * p[0]) {
                break;
            }
        }
    }
    Placement { cross_energy: cross(&best), cross_energy_unplaced: cross(&zero), objective: best_val, offsets: best }
}

/// A measured quantity against its target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub measured: f64,
    pub target: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn absolute(measured: f64, target: f64, tolerance: f64) -> Self {
        let error = (measured - target).abs();
        Check { measured, target, error, tolerance, pass: error <= tolerance }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbReport {
    pub t: f64,
    pub e: f64,
    pub h: f64,
    pub delta: f64,
    /// `‖u‖²` and `H(u)` of the background.
    pub background_energy: f64,
    pub background_helicity: f64,
    /// `e_R = (2e − ‖u‖² − δ)/3`
    pub e_r: f64,
    pub coefficients: [f64; 6],
    pub placement: Placement,
    /// `½‖u+w_R‖² − ½‖u‖²` against `(2e − ‖u‖² − δ)/2`, tolerance `2%·δ`.
    pub energy: Check,
    pub h_next: f64,
    /// `H(u+w_H) − H(u)` against `h_{q+1}²`, relative tolerance.
    pub helical: Check,
    /// `½‖w_H‖²`
    pub helical_energy: f64,
    /// `H(u, w)` for the full perturbation.
    pub cross_helicity: Check,
    pub cross_reynolds: f64,
    pub cross_helical: f64,
    /// Identity residual of the cone-interior stress check.
    pub cancellation: Check,
    pub cancellation_cone_load: f64,
    /// Increments of the full `w = w_R + w_H`.
    pub combined: IncrementReport,
    /// Fourier mass fraction of `w` outside `[λ/Γ, λΓ]`.
    pub localization: Check,
    pub assembly_residual: f64,
    pub div_residual: f64,
    pub mean: [f64; 3],
}

impl PerturbReport {
    pub fn pass(&self) -> bool {
        self.energy.pass && self.helical.pass && self.cross_helicity.pass && self.cancellation.pass && self.localization.pass
    }
}

/// Fields produced by [`perturb`].
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub reynolds: VectorField3,
    pub helical: VectorField3,
    pub total: VectorField3,
}

fn traceless_probe(grid: Grid, scale: f64) -> Vec<Sym3> {
    (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let s = (2.0 * PI * x[0]).sin();
            let c = (2.0 * PI * x[1]).cos();
            [[scale * s, scale * c, 0.0], [scale * c, -scale * s, 0.5 * scale], [0.0, 0.5 * scale, 0.0]]
        })
        .collect()
}

/// One perturbation step on the background `u` with `Rℓ = 0`, `Φ = Id` and trivial cutoffs.
pub fn perturb(u: &VectorField3, profiles: &ProfilePair, p: &ToyParams, t: f64) -> Result<(Perturbation, PerturbReport)> {
    profiles.validate()?;
    p.validate()?;
    let grid = u.grid;
    if grid.n() != p.n {
        return Err(Error::GridMismatch(grid.n(), p.n));
    }
    let e = profiles.e.eval(t);
    let h = profiles.h.eval(t);
    let background_energy = u.l2_norm().powi(2);
    let background_helicity = helicity_fourier(u);
    let e_r = (2.0 * e - background_energy - p.delta) / 3.0;
    if !(e_r > 0.0) {
        return Err(Error::InvalidParams(format!("energy gap 2e - |u|^2 - delta = {} must be positive", 3.0 * e_r)));
    }

    // Reynolds part
    let zero = vec![[[0.0; 3]; 3]; grid.len()];
    let coeffs = reynolds_coefficients(grid, &zero, e_r, 1.0)?;
    let a: Vec<f64> = coeffs.fields.iter().map(|f| f.data[0]).collect();
    let set = base_set();
    let specs: Vec<PipeSpec> = set.xi.iter().map(|xi| PipeSpec::new(*xi, p.lambda, p.r).with_order(p.order)).collect();
    let trial: Vec<PipeFlow> = specs.iter().map(|s| make_pipe(s, grid)).collect::<Result<_>>()?;
    let placement = place_pipes(&trial, &a, p.placement_trials, p.seed);
    let mut reynolds = VectorField3::zeros(grid);
    let mut assembly_residual: f64 = 0.0;
    for ((spec, f), off) in specs.iter().zip(&coeffs.fields).zip(&placement.offsets) {
        let pipe = make_pipe(&spec.clone().with_offset(*off), grid)?;
        let asm = assemble_perturbation(f, &pipe.u())?;
        assembly_residual = assembly_residual.max(asm.identity_residual);
        reynolds = reynolds.add(&asm.total)?;
    }

    // stress cancellation with a cone-interior traceless stress
    let stress = traceless_probe(grid, 0.05 * e_r);
    let with_stress = reynolds_coefficients(grid, &stress, e_r, 1.0)?;
    let cancel = oscillation_cancellation_check(&with_stress, &stress);

    // helical part
    let h_next = helical_amplitude(h, background_helicity, p.gamma_prev, p.gamma)?;
    let base = PipeSpec::new(RationalDirection::axis(1), p.lambda, p.r).with_order(p.order).with_band(p.helical_band);
    let hspec = HelicalSpec { base, lambda_star: p.lambda_star, sign: 1 };
    let hp = make_helical(&hspec, grid)?;
    let fields = hp.fields();
    let norm = hp.helicity_normalization().sqrt();
    let a_h = ScalarField::from_fn(grid, |_| h_next * norm);
    let asm_h = assemble_perturbation(&a_h, &fields.potential)?;
    assembly_residual = assembly_residual.max(asm_h.identity_residual);
    let helical = asm_h.total;

    let total = reynolds.add(&helical)?;
    let energy_target = 0.5 * (2.0 * e - background_energy - p.delta);
    let target_h = h_next * h_next;
    let rep_r = increment_report(u, &reynolds, energy_target, target_h)?;
    let rep_h = increment_report(u, &helical, energy_target, target_h)?;
    let combined = increment_report(u, &total, energy_target, target_h)?;
    let lo = p.lambda as f64 / p.gamma;
    let hi = p.lambda as f64 * p.gamma;
    let outside = spectral_mass_outside(&total, lo, hi);
    let loc_tol = (p.lambda as f64).powi(-4).min(1e-4);

    let report = PerturbReport {
        t,
        e,
        h,
        delta: p.delta,
        background_energy,
        background_helicity,
        e_r,
        coefficients: [a[0], a[1], a[2], a[3], a[4], a[5]],
        placement,
        energy: Check::absolute(rep_r.energy_increment, energy_target, p.energy_window * p.delta),
        h_next,
        helical: Check::absolute(rep_h.helicity_increment, target_h, p.helical_window * target_h),
        helical_energy: 0.5 * helical.l2_norm().powi(2),
        cross_helicity: Check::absolute(combined.cross_helicity, 0.0, 1e-3 * target_h),
        cross_reynolds: rep_r.cross_helicity,
        cross_helical: rep_h.cross_helicity,
        cancellation: Check::absolute(cancel, 0.0, 1e-10),
        cancellation_cone_load: with_stress.cone_load,
        combined,
        localization: Check::absolute(outside, 0.0, loc_tol),
        assembly_residual,
        div_residual: div_residual(&total),
        mean: total.mean(),
    };
    Ok((Perturbation { reynolds, helical, total }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helical_amplitude_arithmetic() {
        assert!((helical_amplitude(1.0, 0.0, 4.0, 8.0).unwrap().powi(2) - 0.75).abs() < 1e-15);
        assert!(helical_amplitude(1.0, 1.0, 4.0, 8.0).is_err());
        assert!(helical_amplitude(1.0, 2.0, 4.0, 8.0).is_err());
        assert!(helical_amplitude(1.0 / 8.0, 0.0, 4.0, 8.0).unwrap() > 0.0);
    }

    #[test]
    fn mollifier_preserves_constants() {
        let v = time_mollify(|_| 2.5, 0.3, 0.1, 16).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
        assert!(time_mollify(|_| 1.0, 0.0, 0.1, 4).is_err());
        assert!(time_mollify(|_| 1.0, 0.0, 0.0, 16).is_err());
    }

    #[test]
    fn mollifier_is_symmetric() {
        let v = time_mollify(|s| s, 0.7, 0.2, 32).unwrap();
        assert!((v - 0.7).abs() < 1e-14);
    }

    #[test]
    fn zero_stress_gives_constant_coefficients() {
        let g = Grid::new(8).unwrap();
        let zero = vec![[[0.0; 3]; 3]; g.len()];
        let c = reynolds_coefficients(g, &zero, 2.0, 4.0).unwrap();
        let id = decompose(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        for (f, g2) in c.fields.iter().zip(id.coefficients) {
            assert!(f.data.iter().all(|v| (v - (8.0 * g2).sqrt()).abs() < 1e-12));
        }
        assert!(oscillation_cancellation_check(&c, &zero) < 1e-12);
    }

    #[test]
    fn cone_violation_reports_location() {
        let g = Grid::new(8).unwrap();
        let mut r = vec![[[0.0; 3]; 3]; g.len()];
        r[5] = [[3.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        match reynolds_coefficients(g, &r, 1.0, 1.0) {
            Err(Error::ConeViolation { index, .. }) => assert_eq!(index, 5),
            other => panic!("expected a cone violation, got {other:?}"),
        }
    }

    #[test]
    fn constant_coefficient_has_no_corrector() {
        let g = Grid::new(16).unwrap();
        let v = crate::spectral::random::random_solenoidal(g, 3, 1);
        let a = ScalarField::from_fn(g, |_| 1.5);
        let asm = assemble_perturbation(&a, &v).unwrap();
        assert!(asm.corrector.linf_norm() < 1e-12);
        assert!(asm.identity_residual < 1e-12);
    }

    #[test]
    fn curl_identity_for_smooth_coefficient() {
        let g = Grid::new(32).unwrap();
        let v = crate::spectral::random::random_solenoidal(g, 4, 2);
        let a = ScalarField::from_fn(g, |x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[2]).cos());
        let asm = assemble_perturbation(&a, &v).unwrap();
        assert!(asm.identity_residual < 1e-8);
        assert!(asm.div_residual < 1e-10);
    }

    #[test]
    fn assembly_rejects_underresolved_products() {
        let g = Grid::new(16).unwrap();
        let v = crate::spectral::random::random_solenoidal(g, 6, 3);
        let a = ScalarField::from_fn(g, |x| (2.0 * PI * 4.0 * x[0]).cos());
        assert!(matches!(assemble_perturbation(&a, &v), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn zero_perturbation_has_zero_increments() {
        let g = Grid::new(16).unwrap();
        let u = beltrami_background(g, 0.5);
        let r = increment_report(&u, &VectorField3::zeros(g), 1.0, 1.0).unwrap();
        assert_eq!(r.energy_increment, 0.0);
        assert!(r.helicity_increment.abs() < 1e-15);
    }

    #[test]
    fn beltrami_background_helicity() {
        let g = Grid::new(16).unwrap();
        let u = beltrami_background(g, 0.5f64.sqrt());
        assert!((helicity_fourier(&u) - PI).abs() < 1e-12);
    }
}
