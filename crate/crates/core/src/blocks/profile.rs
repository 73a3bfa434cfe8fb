//! Radial cross-section profiles for pipes, in units where the support radius is 1/4.

use crate::error::{Error, Result};
use crate::kernels::smooth_step;
use crate::quad::{bessel_j, Composite};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

pub const PROFILE_RADIUS: f64 = 0.25;
const WIDTH: f64 = 0.05;

/// Mean-zero radial profile `ϱ = Δ^{D/2} θ` with `θ` supported in the disc of radius 1/4.
///
/// `ϱ` is a sum of smooth plateau bands with alternating signs; the band heights
/// are fixed by requiring `∫ ϱ |y|^{2i} dy = 0` for `i < D/2`, which is exactly the
/// condition for `Δ^{-D/2} ϱ` to be compactly supported. Nearly flat bands keep
/// `‖ϱ‖_∞` close to the `L²` lower bound `1/√(area)`.
#[derive(Clone, Debug)]
pub struct PipeProfile {
    order: usize,
    knots: Vec<f64>,
    heights: Vec<f64>,
    scale: f64,
    quad: Composite,
}

impl PipeProfile {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || order % 2 == 1 {
            return Err(Error::InvalidPipe(format!("potential order must be even and at least 2, got {order}")));
        }
        let m = order / 2;
        let knots: Vec<f64> = match m {
            1 => vec![0.158],
            2 => vec![0.1125, 0.1972],
            _ => (1..=m)
                .map(|j| (PROFILE_RADIUS - WIDTH) * (j as f64 / (m + 1) as f64).sqrt())
                .collect(),
        };
        let quad = Composite::new(0.0, PROFILE_RADIUS, 256, 8);
        let mut p = PipeProfile { order, knots, heights: vec![1.0; m + 1], scale: 1.0, quad };
        let mom = |p: &PipeProfile, band: usize, i: usize| {
            p.quad.integrate(|r| p.band(band, r) * r.powi(2 * i as i32) * 2.0 * PI * r)
        };
        let a = DMatrix::from_fn(m, m, |i, j| mom(&p, j + 1, i));
        let b = DVector::from_fn(m, |i, _| -mom(&p, 0, i));
        let h = a.lu().solve(&b).ok_or_else(|| Error::InvalidPipe("degenerate profile moments".into()))?;
        for j in 0..m {
            p.heights[j + 1] = h[j];
        }
        let l2 = p.quad.integrate(|r| p.eval(r).powi(2) * 2.0 * PI * r).sqrt();
        p.scale = 1.0 / l2;
        Ok(p)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn band(&self, j: usize, r: f64) -> f64 {
        let step = |k: f64| smooth_step((r - (k - 0.5 * WIDTH)) / WIDTH);
        let outer = 1.0 - smooth_step((r - (PROFILE_RADIUS - WIDTH)) / WIDTH);
        let lo = if j == 0 { 1.0 } else { step(self.knots[j - 1]) };
        let hi = if j < self.knots.len() { step(self.knots[j]) } else { 0.0 };
        (lo - hi) * outer
    }

    /// `ϱ(|y|)`, normalized so that `∫_{ℝ²} ϱ² = 1`.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= PROFILE_RADIUS {
            return 0.0;
        }
        self.scale * (0..self.heights.len()).map(|j| self.heights[j] * self.band(j, r)).sum::<f64>()
    }

    /// Radial integral `∫_{ℝ²} f(ϱ(|y|), |y|) dy`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.quad.integrate(|r| f(self.eval(r), r) * 2.0 * PI * r)
    }

    /// Two-dimensional Fourier transform `ϱ̂(κ) = 2π ∫ ϱ(ρ) J₀(2πκρ) ρ dρ`.
    pub fn hankel(&self, kappa: f64) -> f64 {
        self.quad.integrate(|r| 2.0 * PI * self.eval(r) * bessel_j(0, 2.0 * PI * kappa * r) * r)
    }
}

/// Nonnegative plateau bump of radius 1/4 used for bundling densities.
pub fn bundle_bump(r: f64) -> f64 {
    1.0 - smooth_step((r - 0.5 * PROFILE_RADIUS) / (0.5 * PROFILE_RADIUS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_vanish() {
        for d in [2, 4, 6] {
            let p = PipeProfile::new(d).unwrap();
            for i in 0..d / 2 {
                let m = p.integrate(|v, r| v * r.powi(2 * i as i32));
                assert!(m.abs() < 1e-12, "D={d}, i={i}, moment={m}");
            }
            assert!((p.integrate(|v, _| v * v) - 1.0).abs() < 1e-12);
            assert_eq!(p.eval(0.25), 0.0);
        }
    }

    #[test]
    fn odd_order_rejected() {
        assert!(PipeProfile::new(3).is_err());
        assert!(PipeProfile::new(0).is_err());
    }

    #[test]
    fn hankel_at_zero_is_the_mean() {
        let p = PipeProfile::new(2).unwrap();
        assert!(p.hankel(0.0).abs() < 1e-12);
    }
}
