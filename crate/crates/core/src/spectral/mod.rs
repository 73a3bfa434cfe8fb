//! Periodic grids, FFT-backed fields and spectral calculus on the unit torus.
//!
//! The Fourier convention is `𝓕(f)(k) = ∫ f(x) e^{-2πik·x} dx` on `[0,1)^3`,
//! computed as the grid average. Derivatives multiply by `2πik`; the unpaired
//! Nyquist modes are dropped by every derivative operator.

mod fft;
mod field;
mod grid;
pub mod io;
mod multiplier;
pub mod random;
mod trig;

pub use fft::{fft2, fft3};
pub use field::{
    ccross, cross, dealiased_product, dot3, norm3, ScalarField, SpectralField3, SpectralScalar,
    VectorField3,
};
pub use grid::Grid;
pub use multiplier::{apply_multiplier, apply_multiplier_complex, apply_multiplier_spectral, Multiplier};
pub use trig::{TrigSeries, TrigSeries3};
