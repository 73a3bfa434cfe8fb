//! Reference values computed independently of the library code paths.

use helicity_lab::geometry::{base_set, decompose, Sym3};
use helicity_lab::helicity::{gauss_linking, hopf_link, unlinked_rings};
use helicity_lab::kernels::{schwartz_admissible, AdmissibilityOptions, Admissibility, Mollifier, MollifierProfile};
use helicity_lab::quad::{bessel_j, gauss_legendre};
use helicity_lab::spectral::{Grid, ScalarField};
use helicity_lab::toy::{helical_amplitude, oscillation_cancellation_check, reynolds_coefficients};
use num_rational::Ratio;
use std::f64::consts::PI;

type Q = Ratio<i64>;

/// Exact solution of `Σ c_ξ ξ⊗ξ = Id` over the base directions by rational elimination.
fn identity_coefficients_exact() -> [Q; 6] {
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let dirs: Vec<[i64; 3]> = base_set().xi.iter().map(|d| d.num).collect();
    let mut m: Vec<Vec<Q>> = pairs
        .iter()
        .map(|&(a, b)| {
            let mut row: Vec<Q> = dirs.iter().map(|v| Q::new(v[a] * v[b], 25)).collect();
            row.push(Q::from_integer(i64::from(a == b)));
            row
        })
        .collect();
    for col in 0..6 {
        let piv = (col..6).find(|&r| m[r][col] != Q::from_integer(0)).expect("nonsingular");
        m.swap(col, piv);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for r in 0..6 {
            if r != col {
                let f = m[r][col];
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    std::array::from_fn(|i| m[i][6])
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[test]
fn identity_decomposition_matches_rational_elimination() {
    let exact = identity_coefficients_exact();
    let expect = [Q::new(23, 32), Q::new(193, 288), Q::new(1, 9)];
    for (i, q) in exact.iter().enumerate() {
        assert_eq!(*q, expect[i / 2]);
    }
    let id: Sym3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let dec = decompose(&id).unwrap();
    for (c, q) in dec.coefficients.iter().zip(exact) {
        assert!((c - to_f64(q)).abs() < 1e-14, "{c} vs {q}");
    }
}

#[test]
fn reynolds_coefficients_of_zero_stress() {
    let grid = Grid::new(8).unwrap();
    let r = vec![[[0.0; 3]; 3]; grid.len()];
    let (e, gain) = (0.7, 16.0);
    let coeffs = reynolds_coefficients(grid, &r, e, gain).unwrap();
    let exact = identity_coefficients_exact();
    for (f, q) in coeffs.fields.iter().zip(exact) {
        let want = (e * gain * to_f64(q)).sqrt();
        assert!(f.data.iter().all(|v| (v - want).abs() < 1e-13));
    }
    assert!(oscillation_cancellation_check(&coeffs, &r) < 1e-13);
}

#[test]
fn reynolds_coefficients_reject_stress_outside_cone() {
    let grid = Grid::new(8).unwrap();
    let mut r = vec![[[0.0; 3]; 3]; grid.len()];
    r[5] = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
    let err = reynolds_coefficients(grid, &r, 1.0, 1.0).unwrap_err();
    assert_eq!(err.kind(), "cone_violation");
    let _ = ScalarField::zeros(grid);
}

#[test]
fn helical_amplitude_arithmetic() {
    // gap 3, gains 4 and 8: sqrt(3 * (1 - 1/4))
    let a = helical_amplitude(5.0, 2.0, 4.0, 8.0).unwrap();
    assert!((a - 1.5).abs() < 1e-15);
    assert!(helical_amplitude(1.0, 2.0, 4.0, 8.0).is_err());
    assert!(helical_amplitude(3.0, 2.0, 16.0, 8.0).is_err());
}

#[test]
fn gauss_linking_of_standard_links() {
    let [a, b] = hopf_link(0.1);
    let lk = gauss_linking(&a, &b, 512);
    assert!((lk.abs() - 1.0).abs() < 1e-3, "{lk}");
    let [a, b] = unlinked_rings(0.1);
    assert!(gauss_linking(&a, &b, 512).abs() < 1e-3);
}

#[test]
fn gaussian_admissibility_matches_closed_form() {
    // φ(t) = e^{-t²} has φ̌_ε(x) = π^{3/2} ε^{-3} e^{-π²|x|²/ε²}, a positive unit-mass
    // Gaussian; its mass outside radius R is erfc(a) + 2a e^{-a²}/√π with a = πR/ε.
    let eps = 0.1;
    let (lambda_cut, gamma) = (40.0, 1.0);
    let m = Mollifier::new(MollifierProfile::Gaussian, eps).unwrap();
    let rep = schwartz_admissible(&m, lambda_cut, gamma, AdmissibilityOptions { power: 1.0, rtol: 1e-6 });
    let a = PI * gamma * gamma / lambda_cut / eps;
    let tail = libm::erfc(a) + 2.0 * a * (-a * a).exp() / PI.sqrt();
    assert!((rep.l1_norm - 1.0).abs() < 1e-6, "{}", rep.l1_norm);
    assert!((rep.tail - tail).abs() < 1e-6, "{} vs {tail}", rep.tail);
    let want = if rep.l1_norm <= 1.0 + 1e-9 && tail <= 1.0 / lambda_cut { Admissibility::Pass } else { Admissibility::Fail };
    assert_eq!(rep.verdict, want);
}

#[test]
fn gauss_legendre_is_exact_on_polynomials() {
    let (x, w) = gauss_legendre(8);
    for p in 0..16 {
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
        let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
        assert!((q - exact).abs() < 1e-14, "degree {p}");
    }
}

#[test]
fn bessel_matches_libm() {
    for n in 0..4 {
        for i in 0..200 {
            let x = 0.1 * i as f64;
            assert!((bessel_j(n, x) - libm::jn(n, x)).abs() < 1e-12, "J_{n}({x})");
        }
    }
}

#[test]
fn linked_rings_constant() {
    use helicity_lab::helicity::linked_rings_helicity;
    let grid = Grid::new(64).unwrap();
    let linked = linked_rings_helicity(grid, hopf_link(0.15), [1.0, 0.5], 0.02).unwrap();
    let c = linked.constant.unwrap();
    assert!((linked.linking_number.abs() - 1.0).abs() < 1e-3);
    assert!((c - 2.0).abs() < 1e-4, "{c}");
    let free = linked_rings_helicity(grid, unlinked_rings(0.15), [1.0, 0.5], 0.02).unwrap();
    assert!(free.constant.is_none());
    assert!(free.helicity.abs() < 1e-3 * linked.helicity.abs());
}
