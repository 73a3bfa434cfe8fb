use super::field::{SpectralField3, VectorField3};
use super::grid::Grid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller keeps the draw sequence independent of distribution crates
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn in_band(grid: Grid, idx: usize, band: i64) -> bool {
    let k = grid.mode(idx);
    idx != 0 && !grid.is_nyquist(idx) && k.iter().all(|c| c.abs() <= band)
}

/// Mean-zero divergence-free field with Gaussian coefficients on `|k|_∞ ≤ band`.
pub fn random_solenoidal(grid: Grid, band: i64, seed: u64) -> VectorField3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SpectralField3::zeros(grid);
    for idx in 0..grid.len() {
        if !in_band(grid, idx, band) {
            continue;
        }
        let mut v = [Complex64::default(); 3];
        for c in v.iter_mut() {
            *c = Complex64::new(gaussian(&mut rng), gaussian(&mut rng));
        }
        s.set(idx, v);
    }
    hermitian(&mut s);
    s.leray().to_physical()
}

/// White-noise field on `|k|_∞ ≤ band` with every mode a positive eigenvector
/// of curl, so the helicity density is maximal at each scale.
pub fn random_aligned(grid: Grid, band: i64, seed: u64) -> VectorField3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SpectralField3::zeros(grid);
    for idx in 0..grid.len() {
        if !in_band(grid, idx, band) {
            continue;
        }
        let k = grid.mode(idx);
        let phase: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let z = Complex64::from_polar(1.0, phase);
        let h = positive_helical(k);
        s.set(idx, [h[0] * z, h[1] * z, h[2] * z]);
    }
    hermitian_keep_upper(&mut s);
    s.to_physical()
}

/// Unit vector `h` with `i k̂ × h = h`.
pub fn positive_helical(k: [i64; 3]) -> [Complex64; 3] {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let nk = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    let kh = [kf[0] / nk, kf[1] / nk, kf[2] / nk];
    let t = if kh[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let a = normalize(cross(t, kh));
    let b = cross(kh, a);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        Complex64::new(a[0] * s, b[0] * s),
        Complex64::new(a[1] * s, b[1] * s),
        Complex64::new(a[2] * s, b[2] * s),
    ]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn hermitian(s: &mut SpectralField3) {
    let g = s.grid;
    let orig = s.clone();
    for idx in 0..g.len() {
        if g.is_nyquist(idx) {
            continue;
        }
        let m = g.neg_index(idx);
        let a = orig.at(idx);
        let b = orig.at(m);
        s.set(idx, [(a[0] + b[0].conj()) * 0.5, (a[1] + b[1].conj()) * 0.5, (a[2] + b[2].conj()) * 0.5]);
    }
}

fn hermitian_keep_upper(s: &mut SpectralField3) {
    let g = s.grid;
    for idx in 0..g.len() {
        if g.is_nyquist(idx) || idx == 0 {
            continue;
        }
        let k = g.mode(idx);
        let upper = k[2] > 0 || (k[2] == 0 && (k[1] > 0 || (k[1] == 0 && k[0] > 0)));
        if upper {
            let a = s.at(idx);
            s.set(g.neg_index(idx), [a[0].conj(), a[1].conj(), a[2].conj()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solenoidal_field_is_real_and_divergence_free() {
        let g = Grid::new(16).unwrap();
        let u = random_solenoidal(g, 4, 7);
        let s = u.to_spectral();
        assert!(s.divergence().l2_norm() < 1e-12 * s.l2_norm());
        assert!(u.mean().iter().all(|m| m.abs() < 1e-14));
        assert!(s.band(1e-12) <= 4);
    }

    #[test]
    fn aligned_field_is_curl_eigenfield_per_mode() {
        let g = Grid::new(16).unwrap();
        let u = random_aligned(g, 3, 1).to_spectral();
        let w = u.curl();
        for idx in 1..g.len() {
            let k = g.mode(idx);
            let nk = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
            for c in 0..3 {
                let expect = u.comps[c][idx] * (2.0 * std::f64::consts::PI * nk);
                assert!((w.comps[c][idx] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_field() {
        let g = Grid::new(8).unwrap();
        assert_eq!(random_solenoidal(g, 2, 3), random_solenoidal(g, 2, 3));
    }
}
