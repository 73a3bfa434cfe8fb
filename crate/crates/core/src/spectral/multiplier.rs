use super::field::{SpectralField3, VectorField3};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// A Fourier multiplier `k ↦ φ(k)` on integer wavenumbers.
#[derive(Clone)]
pub struct Multiplier {
    name: String,
    symbol: Arc<dyn Fn([i64; 3]) -> Complex64 + Send + Sync>,
    support: Option<f64>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

impl Multiplier {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn([i64; 3]) -> Complex64 + Send + Sync + 'static,
    {
        Multiplier { name: name.into(), symbol: Arc::new(f), support: None }
    }

    pub fn real<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn([i64; 3]) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, move |k| Complex64::new(f(k), 0.0))
    }

    /// The identity multiplier (the Dirac kernel).
    pub fn identity() -> Self {
        Self::real("dirac", |_| 1.0)
    }

    /// Declares that `φ(k) = 0` for `|k| > r`.
    pub fn with_support(mut self, r: f64) -> Self {
        self.support = Some(r);
        self
    }

    pub fn support(&self) -> Option<f64> {
        self.support
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, k: [i64; 3]) -> Complex64 {
        (self.symbol)(k)
    }
}

/// Applies `φ` mode by mode; rejects symbols leaving the closed unit disk.
pub fn apply_multiplier_spectral(m: &Multiplier, u: &SpectralField3) -> Result<SpectralField3> {
    let g = u.grid;
    let mut out = SpectralField3::zeros(g);
    for idx in 0..g.len() {
        let k = g.mode(idx);
        let phi = m.eval(k);
        if !(phi.norm() <= 1.0 + 1e-12) {
            return Err(Error::MultiplierOutOfDisk { k, value: phi.norm() });
        }
        let v = u.at(idx);
        out.set(idx, [v[0] * phi, v[1] * phi, v[2] * phi]);
    }
    Ok(out)
}

/// Real part of `𝓕^{-1}(φ 𝓕 u)`. For symbols with `φ(-k) = conj φ(k)` this is the
/// whole result; otherwise see [`apply_multiplier_complex`].
pub fn apply_multiplier(m: &Multiplier, u: &VectorField3) -> Result<VectorField3> {
    Ok(apply_multiplier_spectral(m, &u.to_spectral())?.to_physical())
}

pub fn apply_multiplier_complex(m: &Multiplier, u: &VectorField3) -> Result<[Vec<Complex64>; 3]> {
    Ok(apply_multiplier_spectral(m, &u.to_spectral())?.to_physical_complex())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_projection_of_cosine() {
        let g = Grid::new(8).unwrap();
        let u = VectorField3::from_fn(g, |x| [(2.0 * PI * x[0]).cos(), 0.0, 0.0]);
        let m = Multiplier::real("e1", |k| if k == [1, 0, 0] { 1.0 } else { 0.0 });
        let out = apply_multiplier_complex(&m, &u).unwrap();
        for idx in 0..g.len() {
            let x = g.point(idx)[0];
            let expect = Complex64::from_polar(0.5, 2.0 * PI * x);
            assert!((out[0][idx] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn identity_is_exact() {
        let g = Grid::new(8).unwrap();
        let u = VectorField3::from_fn(g, |x| [x[0].sin(), (3.0 * x[1]).cos(), x[2]]);
        let v = apply_multiplier(&Multiplier::identity(), &u).unwrap();
        assert!(v.sub(&u).unwrap().linf_norm() < 1e-13);
    }

    #[test]
    fn rejects_large_symbol() {
        let g = Grid::new(8).unwrap();
        let u = VectorField3::zeros(g);
        let m = Multiplier::real("big", |k| if k == [2, 0, 0] { 1.5 } else { 0.0 });
        assert!(matches!(apply_multiplier(&m, &u), Err(Error::MultiplierOutOfDisk { k: [2, 0, 0], .. })));
    }
}
