//! Spectral helicity diagnostics and Mikado-type building blocks on the unit 3-torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grids, fields, FFTs, curl/div, multipliers, the `VF3` format;
//! * [`kernels`]: class-A cutoffs, Littlewood–Paley shells and mollifiers;
//! * [`helicity`]: classical, Fourier, mollified and shell-matrix helicity;
//! * [`geometry`]: the direction set `Ξ` and decomposition of tensors near `Id`;
//! * [`blocks`]: pipe flows, bundling, cutoffs and helical pipes;
//! * [`transport`]: flow maps of smooth backgrounds and transported blocks;
//! * [`toy`]: a single resolved step of the helicity-prescribing iteration;
//! * [`acceptance`]: the numbered acceptance checks shared by tests and the CLI.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod blocks;
pub mod error;
pub mod geometry;
pub mod helicity;
pub mod kernels;
pub mod quad;
pub mod spectral;
pub mod toy;
pub mod transport;

pub use error::{Error, Result};
