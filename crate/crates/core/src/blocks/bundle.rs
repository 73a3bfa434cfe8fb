use super::frame::Frame;
use super::pipe::{make_pipe, PipeLattice, PipeSpec};
use super::profile::bundle_bump;
use crate::error::{Error, Result};
use crate::geometry::RationalDirection;
use crate::kernels::smooth_step;
use crate::spectral::{Grid, ScalarField, VectorField3};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Coarse bundling density `ρ̄`: a non-negative pipe density of frequency `λ_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundlingSpec {
    pub xi: RationalDirection,
    pub lambda: u32,
    pub r: f64,
    #[serde(default)]
    pub shift: [usize; 2],
}

impl BundlingSpec {
    fn lattice(&self) -> Result<PipeLattice> {
        PipeLattice::new(&PipeSpec::new(self.xi, self.lambda, self.r).with_shift(self.shift))
    }
}

/// Samples `ρ̄`, normalized so that the grid mean of `ρ̄²` is 1.
///
/// The density is sampled from its exact profile, so supports of different shifts
/// are disjoint on the grid.
pub fn make_bundling(spec: &BundlingSpec, grid: Grid) -> Result<ScalarField> {
    if grid.n() < 8 * spec.lambda as usize {
        return Err(Error::Unresolved { n: grid.n(), required: 8.0 * spec.lambda as f64 });
    }
    let lat = spec.lattice()?;
    let lam = spec.lambda as f64;
    let raw = ScalarField::from_fn(grid, |x| bundle_bump(lat.distance_to_axis(x) * lam));
    let l2 = raw.l2_norm();
    if l2 == 0.0 {
        return Err(Error::InvalidPipe("bundling density has no grid support".into()));
    }
    Ok(raw.scale(1.0 / l2))
}

/// Squared partition of unity `Σ_I (η̄^I)² = 1` by tiles in the plane orthogonal to `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffTiles {
    pub xi: RationalDirection,
    /// Tile counts along `ξ'` and `ξ''`.
    pub counts: [usize; 2],
}

impl CutoffTiles {
    pub fn single(xi: RationalDirection) -> Self {
        CutoffTiles { xi, counts: [1, 1] }
    }

    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn tile_1d(count: usize, period: f64, i: usize, s: f64) -> f64 {
    if count == 1 {
        return 1.0;
    }
    let len = period / count as f64;
    let ell = len / 8.0;
    let mut u = (s - i as f64 * len).rem_euclid(period);
    if u >= len + 0.5 * ell {
        u -= period;
    }
    let up = smooth_step((u + 0.5 * ell) / ell);
    let down = smooth_step((u - len + 0.5 * ell) / ell);
    (FRAC_PI_2 * up).sin() * (FRAC_PI_2 * down).cos()
}

/// Samples the tiles `η̄^I`, row-major in `I = (i₁, i₂)`.
pub fn cutoff_tiles(tiles: &CutoffTiles, grid: Grid) -> Result<Vec<ScalarField>> {
    if tiles.counts[0] == 0 || tiles.counts[1] == 0 {
        return Err(Error::InvalidParams("cutoff tile counts must be positive".into()));
    }
    let frame = Frame::for_direction(tiles.xi)?;
    let (a, b) = (frame.xi1, frame.xi2);
    let (af, bf) = (a.to_f64(), b.to_f64());
    // s = ξ'·x is well defined modulo 1/den on the torus
    let period = [1.0 / a.den as f64, 1.0 / b.den as f64];
    let mut out = Vec::with_capacity(tiles.len());
    for i1 in 0..tiles.counts[0] {
        for i2 in 0..tiles.counts[1] {
            out.push(ScalarField::from_fn(grid, |x| {
                let s = af[0] * x[0] + af[1] * x[1] + af[2] * x[2];
                let t = bf[0] * x[0] + bf[1] * x[1] + bf[2] * x[2];
                tile_1d(tiles.counts[0], period[0], i1, s) * tile_1d(tiles.counts[1], period[1], i2, t)
            }));
        }
    }
    let worst = (0..grid.len())
        .map(|i| (out.iter().map(|f| f.data[i] * f.data[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(Error::InvalidParams(format!("cutoff tiles fail the partition by {worst:e}")));
    }
    Ok(out)
}

/// An intermittent pipe bundle `𝔹 = ρ̄ Σ_I η̄^I W^I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub pipe: PipeSpec,
    pub bundling: BundlingSpec,
    pub tiles: CutoffTiles,
}

#[derive(Clone, Debug)]
pub struct Bundle {
    pub field: VectorField3,
    pub rho_bar: ScalarField,
    /// Largest `|Σ_I (η̄^I)² − 1|` over the grid.
    pub partition_error: f64,
    /// `‖div 𝔹‖₂ / (2π (n/2) ‖𝔹‖₂)`
    pub div_residual: f64,
}

/// Builds the bundle. Tile `I` uses the pipe shifted by `I` within its sub-cells.
///
/// Each factor is constant along `ξ`. For oblique `ξ` the grid product is
/// projected onto the modes with `k·ξ = 0`, removing the aliases of the sampling.
pub fn make_bundle(spec: &BundleSpec, grid: Grid) -> Result<Bundle> {
    let xi = spec.pipe.xi;
    if spec.bundling.xi != xi || spec.tiles.xi != xi {
        return Err(Error::InvalidParams("bundle components must share the direction".into()));
    }
    let rho_bar = make_bundling(&spec.bundling, grid)?;
    let tiles = cutoff_tiles(&spec.tiles, grid)?;
    let mut sum = ScalarField::zeros(grid);
    for (i, eta) in tiles.iter().enumerate() {
        let i1 = i / spec.tiles.counts[1];
        let i2 = i % spec.tiles.counts[1];
        let base = PipeLattice::new(&spec.pipe)?;
        let shift = [(spec.pipe.shift[0] + i1) % base.sub[0], (spec.pipe.shift[1] + i2) % base.sub[1]];
        let pipe = make_pipe(&spec.pipe.clone().with_shift(shift), grid)?;
        let rho = pipe.rho();
        for j in 0..grid.len() {
            sum.data[j] += eta.data[j] * rho.data[j];
        }
    }
    let partition_error = (0..grid.len())
        .map(|i| (tiles.iter().map(|f| f.data[i] * f.data[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let dens = rho_bar.mul(&sum);
    let x = xi.to_f64();
    let mut field = VectorField3::from_components(
        grid,
        [dens.data.iter().map(|v| v * x[0]).collect(), dens.data.iter().map(|v| v * x[1]).collect(), dens.data.iter().map(|v| v * x[2]).collect()],
    )?;
    if !xi.is_axis() {
        let s = field.to_spectral().map_modes(|k, c| {
            if k[0] * xi.num[0] + k[1] * xi.num[1] + k[2] * xi.num[2] == 0 {
                c
            } else {
                Default::default()
            }
        });
        field = s.to_physical();
    }
    let norm = field.l2_norm();
    let div_residual = if norm > 0.0 {
        field.divergence().l2_norm() / (std::f64::consts::PI * grid.n() as f64 * norm)
    } else {
        0.0
    };
    Ok(Bundle { field, rho_bar, partition_error, div_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiles_partition_unity() {
        let g = Grid::new(16).unwrap();
        let xi = RationalDirection::new([0, 3, 4], 5).unwrap();
        let t = cutoff_tiles(&CutoffTiles { xi, counts: [2, 3] }, g).unwrap();
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn bundling_shifts_are_disjoint() {
        let g = Grid::new(32).unwrap();
        let xi = RationalDirection::axis(2);
        let a = make_bundling(&BundlingSpec { xi, lambda: 4, r: 0.5, shift: [0, 0] }, g).unwrap();
        let b = make_bundling(&BundlingSpec { xi, lambda: 4, r: 0.5, shift: [1, 0] }, g).unwrap();
        assert!((a.mul(&a).mean() - 1.0).abs() < 1e-12);
        assert_eq!(a.mul(&b).linf_norm(), 0.0);
    }
}
