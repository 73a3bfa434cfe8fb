//! Class-A cutoffs, dyadic Littlewood–Paley shells and mollifier multipliers.

use crate::error::{Error, Result};
use crate::quad::Composite;
use crate::spectral::Multiplier;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, all derivatives vanish at both ends.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = bump(t);
    a / (a + bump(1.0 - t))
}

/// Radial cutoff equal to 1 on `|x| ≤ δ`, 0 on `|x| ≥ ρ`, smooth and monotone between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAKernel {
    delta: f64,
    support: f64,
}

impl ClassAKernel {
    pub fn new(delta: f64, support: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < support && support.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "need 0 < delta < support, got delta={delta}, support={support}"
            )));
        }
        Ok(ClassAKernel { delta, support })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.delta {
            1.0
        } else if r >= self.support {
            0.0
        } else {
            1.0 - smooth_step((r - self.delta) / (self.support - self.delta))
        }
    }

    /// Number of dyadic shells a single wavenumber can meet: `⌈log2(ρ/δ)⌉ + 1`.
    pub fn separation(&self) -> usize {
        (self.support / self.delta).log2().ceil() as usize + 1
    }
}

impl Default for ClassAKernel {
    fn default() -> Self {
        ClassAKernel { delta: 0.25, support: 1.0 }
    }
}

#[inline]
fn knorm(k: [i64; 3]) -> f64 {
    ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
}

/// Dyadic shells `φ_1 = φ̃`, `φ_{2^m}(k) = φ̃(2^{-m}k) - φ̃(2^{-m+1}k)`, indexed by `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellFamily {
    pub base: ClassAKernel,
}

impl ShellFamily {
    pub fn new(base: ClassAKernel) -> Self {
        ShellFamily { base }
    }

    /// `φ_{2^m}` at a radial wavenumber.
    #[inline]
    pub fn shell_radial(&self, m: usize, r: f64) -> f64 {
        if m == 0 {
            self.base.eval(r)
        } else {
            let s = 0.5f64.powi(m as i32);
            self.base.eval(s * r) - self.base.eval(2.0 * s * r)
        }
    }

    #[inline]
    pub fn shell(&self, m: usize, k: [i64; 3]) -> f64 {
        self.shell_radial(m, knorm(k))
    }

    /// `∑_{m ≤ M} φ_{2^m}`, which telescopes to `φ̃(2^{-M} ·)`.
    pub fn partial_sum(&self, big_m: usize, k: [i64; 3]) -> f64 {
        (0..=big_m).map(|m| self.shell(m, k)).sum()
    }

    pub fn multiplier(&self, m: usize) -> Multiplier {
        let fam = *self;
        let sup = self.base.support * 2f64.powi(m as i32);
        Multiplier::real(format!("shell{m}"), move |k| fam.shell(m, k)).with_support(sup)
    }

    /// Indices of shells that can be nonzero at radius `r`.
    pub fn active(&self, r: f64) -> std::ops::RangeInclusive<usize> {
        if r <= self.base.delta {
            return 0..=0;
        }
        let lo = (r / self.base.support).log2().floor().max(0.0) as usize;
        let hi = (r / self.base.delta).log2().ceil().max(0.0) as usize + 1;
        lo..=hi
    }
}

/// Radial profile of a mollifier multiplier `φ(ε|k|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MollifierProfile {
    /// `e^{-t^2}`
    Gaussian,
    /// A compactly supported class-A cutoff.
    #[serde(rename = "classA")]
    ClassA(ClassAKernel),
    /// `φ ≡ 1`
    Dirac,
}

impl MollifierProfile {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            MollifierProfile::Gaussian => (-t * t).exp(),
            MollifierProfile::ClassA(a) => a.eval(t),
            MollifierProfile::Dirac => 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MollifierProfile::Gaussian => "gaussian".into(),
            MollifierProfile::ClassA(a) => format!("classA(delta={},support={})", a.delta, a.support),
            MollifierProfile::Dirac => "dirac".into(),
        }
    }

    /// Radius beyond which `φ` is below `1e-17` (or exactly zero).
    fn effective_support(&self) -> f64 {
        match self {
            MollifierProfile::Gaussian => 6.3,
            MollifierProfile::ClassA(a) => a.support,
            MollifierProfile::Dirac => f64::INFINITY,
        }
    }
}

/// The multiplier `k ↦ φ(ε|k|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub profile: MollifierProfile,
    pub eps: f64,
}

impl Mollifier {
    pub fn new(profile: MollifierProfile, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidKernel(format!("eps must be finite and nonnegative, got {eps}")));
        }
        Ok(Mollifier { profile, eps })
    }

    #[inline]
    pub fn eval(&self, k: [i64; 3]) -> f64 {
        self.profile.eval(self.eps * knorm(k))
    }

    pub fn multiplier(&self) -> Multiplier {
        let m = *self;
        Multiplier::real(format!("{}@{}", self.profile.label(), self.eps), move |k| m.eval(k))
    }
}

/// Kernel description used by the JSON interface:
/// `{"kind": "classA" | "gaussian" | "dirac", "delta", "support", "eps"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: String,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub support: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
}

impl KernelSpec {
    pub fn profile(&self) -> Result<MollifierProfile> {
        match self.kind.as_str() {
            "gaussian" => Ok(MollifierProfile::Gaussian),
            "dirac" => Ok(MollifierProfile::Dirac),
            "classA" => {
                let d = ClassAKernel::default();
                Ok(MollifierProfile::ClassA(ClassAKernel::new(
                    self.delta.unwrap_or(d.delta),
                    self.support.unwrap_or(d.support),
                )?))
            }
            other => Err(Error::InvalidKernel(format!("unknown kernel kind {other:?}"))),
        }
    }

    pub fn class_a(&self) -> Result<ClassAKernel> {
        match self.profile()? {
            MollifierProfile::ClassA(a) => Ok(a),
            _ => Err(Error::InvalidKernel("shell decomposition needs a classA kernel".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Admissibility {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub verdict: Admissibility,
    /// `‖φ̌_ε‖_{L^1}`
    pub l1_norm: f64,
    /// `‖φ̌_ε‖_{L^1(F)}` with `F` the complement of the ball of radius `Γ^2/λ_cut`.
    pub tail: f64,
    pub threshold: f64,
    pub note: String,
}

/// Options for [`schwartz_admissible`].
#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityOptions {
    /// Tail exponent `p` in the threshold `λ_cut^{-p}`.
    pub power: f64,
    /// Relative agreement required between two quadrature resolutions.
    pub rtol: f64,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        AdmissibilityOptions { power: 8.0, rtol: 1e-6 }
    }
}

/// Physical-space kernel `φ̌_1(r)` of the unit-scale multiplier, by the radial
/// inverse transform `φ̌(r) = (2/r) ∫ κ φ(κ) sin(2πκr) dκ`.
struct RadialKernel {
    profile: MollifierProfile,
    kmax: f64,
}

impl RadialKernel {
    fn eval(&self, r: f64, pts_per_wave: usize) -> f64 {
        let waves = (self.kmax * r.max(1e-3)).ceil() as usize;
        let panels = (waves * pts_per_wave / 8).max(16);
        let q = Composite::new(0.0, self.kmax, panels, 8);
        if r < 1e-12 {
            return q.integrate(|k| 4.0 * PI * k * k * self.profile.eval(k));
        }
        (2.0 / r) * q.integrate(|k| k * self.profile.eval(k) * (2.0 * PI * k * r).sin())
    }

    /// `(∫_{|x|<R} |φ̌|, ∫_{R<|x|<rmax} |φ̌|)` for the unit-scale kernel.
    fn l1_split(&self, r_cut: f64, rmax: f64, res: usize) -> (f64, f64) {
        let panels = (rmax * 8.0 * res as f64).ceil() as usize;
        let q = Composite::new(0.0, rmax, panels, 8);
        let mut inner = 0.0;
        let mut outer = 0.0;
        for (&r, &w) in q.nodes.iter().zip(&q.weights) {
            let v = 4.0 * PI * r * r * self.eval(r, 4 * res).abs() * w;
            if r < r_cut {
                inner += v;
            } else {
                outer += v;
            }
        }
        (inner, outer)
    }
}

/// Decides whether `φ_ε` has `‖φ̌_ε‖_{L^1} ≤ 1` and `‖φ̌_ε‖_{L^1(F)} ≤ λ_cut^{-p}` with
/// `F = {|x| ≥ Γ^2/λ_cut}`, by quadrature of the 3D radial inverse transform.
pub fn schwartz_admissible(m: &Mollifier, lambda_cut: f64, gamma: f64, opts: AdmissibilityOptions) -> AdmissibilityReport {
    let threshold = lambda_cut.powf(-opts.power);
    if let MollifierProfile::Dirac = m.profile {
        return AdmissibilityReport {
            verdict: Admissibility::Pass,
            l1_norm: 1.0,
            tail: 0.0,
            threshold,
            note: "Dirac mass: admissible by convention".into(),
        };
    }
    if m.eps == 0.0 {
        return AdmissibilityReport {
            verdict: Admissibility::Indeterminate,
            l1_norm: f64::NAN,
            tail: f64::NAN,
            threshold,
            note: "eps = 0 is the Dirac limit of a non-Dirac profile".into(),
        };
    }
    let kernel = RadialKernel { profile: m.profile, kmax: m.profile.effective_support() };
    // unit-scale radius of the excluded region
    let r_cut = gamma * gamma / lambda_cut / m.eps;
    let rmax = match m.profile {
        MollifierProfile::Gaussian => 3.0,
        _ => 40.0,
    };
    let run = |res: usize, rmax: f64| {
        let (inner, outer) = kernel.l1_split(r_cut.min(rmax), rmax, res);
        (inner + outer, if r_cut < rmax { outer } else { 0.0 })
    };
    let (l1_a, tail_a) = run(2, rmax);
    let (l1_b, tail_b) = run(4, rmax * 1.5);
    let agree = |a: f64, b: f64, floor: f64| (a - b).abs() <= opts.rtol * a.abs().max(b.abs()) + floor;
    // far-field mass is what the larger box adds beyond `rmax`
    let converged = agree(l1_a, l1_b, 1e-9) && agree(tail_a, tail_b, 0.1 * threshold);
    let (l1, tail) = (l1_b, tail_b);
    if !converged {
        return AdmissibilityReport {
            verdict: Admissibility::Indeterminate,
            l1_norm: l1,
            tail,
            threshold,
            note: format!("quadrature did not converge (L1 {l1_a:.3e} vs {l1_b:.3e}, tail {tail_a:.3e} vs {tail_b:.3e})"),
        };
    }
    let ok_l1 = l1 <= 1.0 + 1e-6;
    let ok_tail = tail <= threshold;
    let verdict = if ok_l1 && ok_tail { Admissibility::Pass } else { Admissibility::Fail };
    let note = match (ok_l1, ok_tail) {
        (true, true) => "admissible".into(),
        (false, _) => format!("L1 norm {l1:.6} exceeds 1"),
        (true, false) => format!("tail {tail:.3e} exceeds {threshold:.3e}"),
    };
    AdmissibilityReport { verdict, l1_norm: l1, tail, threshold, note }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_radii() {
        assert!(ClassAKernel::new(1.0, 0.5).is_err());
        assert!(ClassAKernel::new(0.0, 0.5).is_err());
    }

    #[test]
    fn plateau_and_support() {
        let k = ClassAKernel::default();
        assert_eq!(k.eval(0.25), 1.0);
        assert_eq!(k.eval(1.0), 0.0);
        assert!(k.eval(0.6) > 0.0 && k.eval(0.6) < 1.0);
        assert_eq!(k.separation(), 3);
    }

    #[test]
    fn smooth_step_symmetry() {
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shells_telescope() {
        let f = ShellFamily::new(ClassAKernel::default());
        for r in [0.0, 0.3, 1.7, 5.0, 13.2, 40.0] {
            let k = [r as i64, 0, 0];
            let s: f64 = (0..=6).map(|m| f.shell(m, k)).sum();
            let t = f.base.eval(k[0] as f64 / 64.0);
            assert!((s - t).abs() < 1e-15);
        }
    }

    #[test]
    fn active_range_covers_support() {
        let f = ShellFamily::new(ClassAKernel::default());
        for r in 0..200 {
            let r = r as f64 * 0.37;
            let act = f.active(r);
            for m in 0..12 {
                if f.shell_radial(m, r).abs() > 0.0 {
                    assert!(act.contains(&m), "r={r}, m={m}");
                }
            }
        }
    }

    #[test]
    fn kernel_json_round_trip() {
        let s: KernelSpec = serde_json::from_str(r#"{"kind":"classA","delta":0.25,"support":1.0}"#).unwrap();
        assert_eq!(s.class_a().unwrap(), ClassAKernel::default());
        let g: KernelSpec = serde_json::from_str(r#"{"kind":"gaussian","eps":0.01}"#).unwrap();
        assert_eq!(g.profile().unwrap(), MollifierProfile::Gaussian);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"kind":"box"}"#).unwrap().profile().is_err());
    }

    #[test]
    fn dirac_passes_by_convention() {
        let m = Mollifier::new(MollifierProfile::Dirac, 0.0).unwrap();
        let r = schwartz_admissible(&m, 16.0, 2.0, AdmissibilityOptions::default());
        assert_eq!(r.verdict, Admissibility::Pass);
    }
}
