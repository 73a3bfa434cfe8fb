use crate::spectral::{Grid, VectorField3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One Fourier mode `a cos 2πkz + b sin 2πkz` of a shear profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearMode {
    pub k: i64,
    pub a: f64,
    pub b: f64,
}

/// A shear `u(x) = f(x₃) (cos θ, sin θ, 0)`: the velocity depends on `x₃` only and
/// points in a fixed direction orthogonal to `e₃`, so `u ⟂ curl u`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShearSpec {
    /// Angle `θ` of the velocity direction in the `(x₁, x₂)` plane.
    #[serde(default)]
    pub angle: f64,
    pub profile: Vec<ShearMode>,
}

impl ShearSpec {
    pub fn band(&self) -> i64 {
        self.profile.iter().map(|m| m.k.abs()).max().unwrap_or(0)
    }

    pub fn direction(&self) -> [f64; 3] {
        [self.angle.cos(), self.angle.sin(), 0.0]
    }
}

fn profile(modes: &[ShearMode], z: f64) -> f64 {
    modes.iter().map(|m| m.a * (2.0 * PI * m.k as f64 * z).cos() + m.b * (2.0 * PI * m.k as f64 * z).sin()).sum()
}

pub fn shear(grid: Grid, spec: &ShearSpec) -> VectorField3 {
    let d = spec.direction();
    VectorField3::from_fn(grid, |x| {
        let f = profile(&spec.profile, x[2]);
        [f * d[0], f * d[1], 0.0]
    })
}

/// Random shear: uniform angle and profile coefficients uniform in `(-1, 1)` on `1 ≤ k ≤ band`.
pub fn random_shear(band: i64, seed: u64) -> ShearSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = rng.gen_range(0.0..2.0 * PI);
    let profile = (1..=band).map(|k| ShearMode { k, a: rng.gen_range(-1.0..1.0), b: rng.gen_range(-1.0..1.0) }).collect();
    ShearSpec { angle, profile }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_is_divergence_free() {
        let g = Grid::new(16).unwrap();
        let u = shear(g, &random_shear(4, 1));
        assert!(u.divergence().linf_norm() < 1e-12);
        assert_eq!(u.comps[2].iter().map(|v| v.abs()).sum::<f64>(), 0.0);
    }

    #[test]
    fn shear_is_orthogonal_to_its_curl() {
        let g = Grid::new(16).unwrap();
        let u = shear(g, &random_shear(5, 2));
        assert!(u.dot(&u.curl()).linf_norm() < 1e-12);
    }
}
