//! Helicity functionals: classical, cross, mollified, shell matrix, the generalized
//! diagnostic, and a linked-ring oracle.

use crate::error::{Error, Result};
use crate::kernels::{ClassAKernel, Mollifier, MollifierProfile, ShellFamily};
use crate::spectral::{apply_multiplier_spectral, ccross, Grid, SpectralField3, VectorField3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `∫ u·curl u` as the plain grid average.
pub fn helicity_classical(u: &VectorField3) -> f64 {
    u.dot(&u.curl()).mean()
}

/// Modal helicity density `Re conj(â(k))·(2πik × b̂(k))`, zero at Nyquist modes.
fn modal_density(a: &SpectralField3, b: &SpectralField3, idx: usize) -> f64 {
    let g = a.grid;
    if g.is_nyquist(idx) {
        return 0.0;
    }
    let k = g.mode(idx);
    let ik = [
        Complex64::new(0.0, 2.0 * PI * k[0] as f64),
        Complex64::new(0.0, 2.0 * PI * k[1] as f64),
        Complex64::new(0.0, 2.0 * PI * k[2] as f64),
    ];
    let c = ccross(ik, b.at(idx));
    let av = a.at(idx);
    (0..3).map(|d| (av[d].conj() * c[d]).re).sum()
}

/// `H(u₁, u₂) = ∫ u₁·curl u₂ = ∑_k 𝓕(u₁)(−k)·(2πik × 𝓕(u₂)(k))`.
pub fn helicity_cross_spectral(a: &SpectralField3, b: &SpectralField3) -> f64 {
    let n = a.grid.len();
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(|i| modal_density(a, b, i)).sum())
        .collect();
    parts.iter().sum()
}

// fixed chunks summed in order keep parallel reductions reproducible
const CHUNK: usize = 1 << 14;

pub fn helicity_cross(u1: &VectorField3, u2: &VectorField3) -> Result<f64> {
    if u1.grid != u2.grid {
        return Err(Error::GridMismatch(u1.grid.n(), u2.grid.n()));
    }
    Ok(helicity_cross_spectral(&u1.to_spectral(), &u2.to_spectral()))
}

/// Fourier-series helicity `H(u, u)`.
pub fn helicity_fourier(u: &VectorField3) -> f64 {
    helicity_fourier_spectral(&u.to_spectral())
}

pub fn helicity_fourier_spectral(s: &SpectralField3) -> f64 {
    helicity_cross_spectral(s, s)
}

/// `H(φ_ε ∗ u, u)`.
pub fn helicity_mollified(u: &VectorField3, m: &Mollifier) -> Result<f64> {
    let s = u.to_spectral();
    let ms = apply_multiplier_spectral(&m.multiplier(), &s)?;
    Ok(helicity_cross_spectral(&ms, &s))
}

/// Pairwise shell helicities `H(𝕡_{φ_{2^m}} u, 𝕡_{φ_{2^{m'}}} u)` for `m, m' ≤ M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShellHelicityMatrix {
    pub max_shell: usize,
    pub kernel: ClassAKernel,
    pub entries: Vec<Vec<f64>>,
}

impl ShellHelicityMatrix {
    pub fn abs_sum(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v.abs()).sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }

    /// `∑ |H_{m,m'}|` over `m, m' ≤ M` for each leading block.
    pub fn abs_sum_trajectory(&self) -> Vec<f64> {
        (0..=self.max_shell)
            .map(|big| (0..=big).flat_map(|a| (0..=big).map(move |b| (a, b))).map(|(a, b)| self.entries[a][b].abs()).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV rows `m,m',value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,mp,value\n");
        for (a, row) in self.entries.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                s.push_str(&format!("{a},{b},{v:.17e}\n"));
            }
        }
        s
    }
}

pub fn shell_matrix(u: &VectorField3, fam: &ShellFamily, max_shell: usize) -> ShellHelicityMatrix {
    shell_matrix_spectral(&u.to_spectral(), fam, max_shell)
}

/// Each entry is `∑_k φ_{2^m}(k) φ_{2^{m'}}(k) h(k)`, which is exact because the shell
/// symbols are real and even.
pub fn shell_matrix_spectral(s: &SpectralField3, fam: &ShellFamily, max_shell: usize) -> ShellHelicityMatrix {
    let g = s.grid;
    let dim = max_shell + 1;
    let n = g.len();
    let parts: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; dim * dim];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let h = modal_density(s, s, idx);
                if h == 0.0 {
                    continue;
                }
                let k = g.mode(idx);
                let r = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
                let act = fam.active(r);
                let lo = *act.start();
                let hi = (*act.end()).min(max_shell);
                let vals: Vec<(usize, f64)> =
                    (lo..=hi).map(|m| (m, fam.shell_radial(m, r))).filter(|(_, v)| *v != 0.0).collect();
                for &(a, va) in &vals {
                    for &(b, vb) in &vals {
                        acc[a * dim + b] += va * vb * h;
                    }
                }
            }
            acc
        })
        .collect();
    let mut entries = vec![0.0; dim * dim];
    for p in &parts {
        for (e, v) in entries.iter_mut().zip(p) {
            *e += v;
        }
    }
    ShellHelicityMatrix {
        max_shell,
        kernel: fam.base,
        entries: (0..dim).map(|a| entries[a * dim..(a + 1) * dim].to_vec()).collect(),
    }
}

/// Tolerances of the generalized-helicity verdict.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GeneralizedOptions {
    /// Cauchy residual of the last two ladder points, relative to `1 + |H|`.
    pub residual_rtol: f64,
    /// Largest admissible abs-sum increment over the last two resolved `M`.
    pub increment_tol: f64,
    /// Largest admissible disagreement between kernels, relative to `1 + |H|`.
    pub agreement_rtol: f64,
}

impl Default for GeneralizedOptions {
    fn default() -> Self {
        GeneralizedOptions { residual_rtol: 1e-6, increment_tol: 1e-8, agreement_rtol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderEstimate {
    pub kernel: String,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// `|H_{i+1} − H_i|` for consecutive ladder points.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShellTrajectory {
    pub kernel: ClassAKernel,
    pub abs_sums: Vec<f64>,
    pub totals: Vec<f64>,
    /// Largest `M` whose shells fit inside the grid band.
    pub resolved: usize,
    pub increments: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    WellDefined,
    Inconclusive,
    Divergent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneralizedHelicityReport {
    pub estimate: f64,
    pub ladders: Vec<LadderEstimate>,
    pub shells: Vec<ShellTrajectory>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    /// The first pair of kernels whose estimates disagree, with the gap.
    pub disagreement: Option<(String, String, f64)>,
}

/// Finite-scale version of the two conditions defining generalized helicity.
pub fn generalized_helicity(
    u: &VectorField3,
    fams: &[ShellFamily],
    mollifiers: &[MollifierProfile],
    ladder: &[f64],
    max_shell: usize,
    opts: GeneralizedOptions,
) -> Result<GeneralizedHelicityReport> {
    if fams.is_empty() || mollifiers.is_empty() || ladder.is_empty() {
        return Err(Error::InvalidParams("generalized helicity needs kernels and a ladder".into()));
    }
    let s = u.to_spectral();
    let ladders: Vec<LadderEstimate> = mollifiers
        .iter()
        .map(|p| {
            let values: Vec<f64> = ladder
                .par_iter()
                .map(|&eps| {
                    let m = Mollifier::new(*p, eps)?;
                    let ms = apply_multiplier_spectral(&m.multiplier(), &s)?;
                    Ok(helicity_cross_spectral(&ms, &s))
                })
                .collect::<Result<_>>()?;
            let residuals: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let last = *values.last().unwrap();
            let converged = residuals.last().is_none_or(|r| *r <= opts.residual_rtol * (1.0 + last.abs()));
            Ok(LadderEstimate { kernel: p.label(), eps: ladder.to_vec(), values, residuals, converged })
        })
        .collect::<Result<_>>()?;
    let half = (u.grid.n() / 2) as f64;
    let shells: Vec<ShellTrajectory> = fams
        .iter()
        .map(|f| {
            let mat = shell_matrix_spectral(&s, f, max_shell);
            let abs_sums = mat.abs_sum_trajectory();
            let totals: Vec<f64> = (0..=max_shell)
                .map(|big| (0..=big).flat_map(|a| (0..=big).map(move |b| (a, b))).map(|(a, b)| mat.entries[a][b]).sum())
                .collect();
            let mut resolved = 0;
            while resolved < max_shell && f.base.support() * 2f64.powi(resolved as i32 + 1) <= half {
                resolved += 1;
            }
            let increments = abs_sums[..=resolved].windows(2).map(|w| w[1] - w[0]).collect();
            ShellTrajectory { kernel: f.base, abs_sums, totals, resolved, increments }
        })
        .collect();

    let estimate = *ladders[0].values.last().unwrap();
    let mut reasons = Vec::new();
    let mut verdict = Verdict::WellDefined;
    for t in &shells {
        let inc = &t.increments;
        if inc.len() >= 2 {
            let (a, b) = (inc[inc.len() - 2], inc[inc.len() - 1]);
            if b > opts.increment_tol && a > opts.increment_tol && b >= a {
                verdict = Verdict::Divergent;
                reasons.push(format!(
                    "abs-sum increments grow over the last resolved shells for {:?}: {a:e} -> {b:e}",
                    t.kernel
                ));
            }
        }
    }
    let mut disagreement = None;
    if verdict != Verdict::Divergent {
        for l in &ladders {
            if !l.converged {
                verdict = Verdict::Inconclusive;
                reasons.push(format!("mollified ladder for {} did not settle: {:?}", l.kernel, l.residuals.last()));
            }
        }
        'outer: for i in 0..ladders.len() {
            for j in i + 1..ladders.len() {
                let (a, b) = (*ladders[i].values.last().unwrap(), *ladders[j].values.last().unwrap());
                let gap = (a - b).abs();
                if gap > opts.agreement_rtol * (1.0 + a.abs().max(b.abs())) {
                    verdict = Verdict::Inconclusive;
                    reasons.push(format!("kernels {} and {} disagree by {gap:e}", ladders[i].kernel, ladders[j].kernel));
                    disagreement = Some((ladders[i].kernel.clone(), ladders[j].kernel.clone(), gap));
                    break 'outer;
                }
            }
        }
        for t in &shells {
            if let Some(w) = t.increments.iter().rev().take(2).copied().reduce(f64::max) {
                if w > opts.increment_tol {
                    verdict = Verdict::Inconclusive;
                    reasons.push(format!("abs-sum still moving by {w:e} at M = {} for {:?}", t.resolved, t.kernel));
                }
            }
        }
    }
    Ok(GeneralizedHelicityReport { estimate, ladders, shells, verdict, reasons, disagreement })
}

/// A circle `c + R(cos s e_a + sin s e_b)` in the coordinate plane normal to `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub center: [f64; 3],
    pub radius: f64,
    /// Index of the coordinate axis normal to the ring.
    pub axis: usize,
    /// `+1` for counterclockwise about `axis`, `-1` otherwise.
    pub orientation: i8,
}

impl Ring {
    fn basis(&self) -> ([f64; 3], [f64; 3]) {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        a[(self.axis + 1) % 3] = 1.0;
        b[(self.axis + 2) % 3] = self.orientation as f64;
        (a, b)
    }

    /// `(γ(s), γ'(s))` at `samples` equispaced parameters.
    pub fn samples(&self, samples: usize) -> Vec<([f64; 3], [f64; 3])> {
        let (a, b) = self.basis();
        (0..samples)
            .map(|j| {
                let s = 2.0 * PI * j as f64 / samples as f64;
                let (sn, cs) = s.sin_cos();
                let p = [0, 1, 2].map(|d| self.center[d] + self.radius * (cs * a[d] + sn * b[d]));
                let t = [0, 1, 2].map(|d| self.radius * (-sn * a[d] + cs * b[d]));
                (p, t)
            })
            .collect()
    }

    pub fn mirror_x(&self) -> Ring {
        let mut r = *self;
        r.center[0] = 1.0 - r.center[0];
        // reflecting x reverses orientation unless x is the normal
        if self.axis != 0 {
            r.orientation = -r.orientation;
        }
        r
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingsReport {
    pub helicity: f64,
    pub linking_number: f64,
    /// `H / (κ₁κ₂ Lk)` when the rings are linked.
    pub constant: Option<f64>,
    pub min_distance: f64,
}

/// Gauss linking integral of two closed polygons, with nearest periodic images.
///
/// Exact only while every coordinate difference between the two curves stays below 1/2.
pub fn gauss_linking(a: &Ring, b: &Ring, samples: usize) -> f64 {
    let pa = a.samples(samples);
    let pb = b.samples(samples);
    let ds = 2.0 * PI / samples as f64;
    let sum: f64 = pa
        .par_iter()
        .map(|(x, tx)| {
            pb.iter()
                .map(|(y, ty)| {
                    let d = [0, 1, 2].map(|i| {
                        let v = x[i] - y[i];
                        v - v.round()
                    });
                    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    let c = [tx[1] * ty[2] - tx[2] * ty[1], tx[2] * ty[0] - tx[0] * ty[2], tx[0] * ty[1] - tx[1] * ty[0]];
                    (d[0] * c[0] + d[1] * c[1] + d[2] * c[2]) / (r * r * r)
                })
                .sum::<f64>()
        })
        .sum();
    sum * ds * ds / (4.0 * PI)
}

fn min_distance(a: &Ring, b: &Ring, samples: usize) -> f64 {
    let pa = a.samples(samples);
    let pb = b.samples(samples);
    pa.iter()
        .flat_map(|(x, _)| {
            pb.iter().map(move |(y, _)| {
                let d = [0, 1, 2].map(|i| {
                    let v = x[i] - y[i];
                    v - v.round()
                });
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            })
        })
        .fold(f64::INFINITY, f64::min)
}

/// Helicity of the velocity whose vorticity is two Gaussian-mollified vortex filaments
/// of strengths `κ₁, κ₂`.
pub fn linked_rings_helicity(grid: Grid, rings: [Ring; 2], kappa: [f64; 2], sigma: f64) -> Result<RingsReport> {
    let samples = 4 * grid.n();
    let dist = min_distance(&rings[0], &rings[1], samples);
    if dist <= 4.0 * sigma {
        return Err(Error::InvalidParams(format!("rings are {dist:.4} apart, need more than 4 sigma = {}", 4.0 * sigma)));
    }
    let ds = 2.0 * PI / samples as f64;
    type Curve = Vec<([f64; 3], [f64; 3])>;
    let curves: Vec<(f64, Curve)> =
        rings.iter().zip(kappa).map(|(r, k)| (k, r.samples(samples))).collect();
    let mut omega = SpectralField3::zeros(grid);
    let vals: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let k = grid.mode(idx);
            if grid.is_nyquist(idx) || k == [0, 0, 0] {
                return [Complex64::default(); 3];
            }
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let damp = (-2.0 * PI * PI * sigma * sigma * k2).exp();
            if damp < 1e-18 {
                return [Complex64::default(); 3];
            }
            let mut acc = [Complex64::default(); 3];
            for (kap, pts) in &curves {
                for (p, t) in pts {
                    let ph = Complex64::from_polar(1.0, -2.0 * PI * (k[0] as f64 * p[0] + k[1] as f64 * p[1] + k[2] as f64 * p[2]));
                    for d in 0..3 {
                        acc[d] += ph * (kap * t[d] * ds);
                    }
                }
            }
            acc.map(|v| v * damp)
        })
        .collect();
    for (idx, v) in vals.into_iter().enumerate() {
        omega.set(idx, v);
    }
    let omega = omega.leray();
    let u = omega.curl_inverse()?;
    let helicity = helicity_cross_spectral(&u, &u);
    let lk = gauss_linking(&rings[0], &rings[1], samples);
    let linked = lk.abs() > 0.5;
    Ok(RingsReport {
        helicity,
        linking_number: lk,
        constant: linked.then(|| helicity / (kappa[0] * kappa[1] * lk)),
        min_distance: dist,
    })
}

/// A Hopf link of two rings of radius `r` near the centre of the torus.
pub fn hopf_link(r: f64) -> [Ring; 2] {
    let c = [0.5 - 0.5 * r, 0.5, 0.5];
    [
        Ring { center: c, radius: r, axis: 2, orientation: 1 },
        Ring { center: [c[0] + r, c[1], c[2]], radius: r, axis: 1, orientation: 1 },
    ]
}

/// Two unlinked rings of radius `r`.
pub fn unlinked_rings(r: f64) -> [Ring; 2] {
    [
        Ring { center: [0.25, 0.5, 0.5], radius: r, axis: 2, orientation: 1 },
        Ring { center: [0.75, 0.5, 0.5], radius: r, axis: 1, orientation: 1 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beltrami(g: Grid) -> VectorField3 {
        VectorField3::from_fn(g, |x| [(2.0 * PI * x[2]).sin(), (2.0 * PI * x[2]).cos(), 0.0])
    }

    #[test]
    fn beltrami_helicity() {
        let g = Grid::new(16).unwrap();
        let u = beltrami(g);
        assert!((helicity_classical(&u) - 2.0 * PI).abs() < 1e-12);
        assert!((helicity_fourier(&u) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mollified_beltrami() {
        let g = Grid::new(16).unwrap();
        let m = Mollifier::new(MollifierProfile::Gaussian, 0.3).unwrap();
        let h = helicity_mollified(&beltrami(g), &m).unwrap();
        assert!((h - 2.0 * PI * (-0.09f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn disjoint_modes_have_no_cross_helicity() {
        let g = Grid::new(16).unwrap();
        let a = VectorField3::from_fn(g, |x| [(2.0 * PI * x[0]).cos(), 0.0, 0.0]);
        let b = VectorField3::from_fn(g, |x| [0.0, 0.0, (2.0 * PI * x[1]).cos()]);
        assert!(helicity_cross(&a, &b).unwrap().abs() < 1e-14);
    }

    #[test]
    fn shell_matrix_sums_to_helicity() {
        let g = Grid::new(16).unwrap();
        let m = shell_matrix(&beltrami(g), &ShellFamily::new(ClassAKernel::default()), 4);
        assert!((m.total() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn csv_has_one_row_per_entry() {
        let g = Grid::new(8).unwrap();
        let m = shell_matrix(&beltrami(g), &ShellFamily::new(ClassAKernel::default()), 2);
        assert_eq!(m.to_csv().lines().count(), 10);
    }
}
