use helicity_lab::geometry::{decompose, frobenius, identity_plus, reconstruct, sample_unit_ball};
use helicity_lab::helicity::{helicity_classical, helicity_cross, helicity_fourier, helicity_mollified, shell_matrix};
use helicity_lab::kernels::{ClassAKernel, Mollifier, MollifierProfile, ShellFamily};
use helicity_lab::spectral::random::{random_aligned, random_solenoidal};
use helicity_lab::spectral::{apply_multiplier, Grid, VectorField3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid {
    Grid::new(16).unwrap()
}

fn field(seed: u64, band: i64) -> VectorField3 {
    random_solenoidal(grid(), band, seed)
}

fn class_a() -> impl Strategy<Value = ClassAKernel> {
    (0.1f64..0.5, 1.1f64..3.0).prop_map(|(d, ratio)| ClassAKernel::new(d, d * ratio).unwrap())
}

fn profile() -> impl Strategy<Value = MollifierProfile> {
    prop_oneof![Just(MollifierProfile::Gaussian), Just(MollifierProfile::Dirac), class_a().prop_map(MollifierProfile::ClassA)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(seed in any::<u64>(), band in 1i64..7) {
        let u = field(seed, band);
        let phys: f64 = u.comps.iter().flatten().map(|v| v * v).sum::<f64>() / grid().len() as f64;
        let spec = u.to_spectral().l2_norm();
        prop_assert!((phys.sqrt() - spec).abs() <= 1e-12 * (1.0 + spec));
        prop_assert!((u.l2_norm() - spec).abs() <= 1e-12 * (1.0 + spec));
    }

    #[test]
    fn divergence_of_curl_vanishes(seed in any::<u64>(), band in 1i64..8) {
        let u = field(seed, band);
        let w = u.curl();
        prop_assert!(w.divergence().linf_norm() <= 1e-10 * (1.0 + w.linf_norm()));
    }

    #[test]
    fn classical_and_fourier_helicity_agree(seed in any::<u64>(), band in 1i64..6) {
        let u = field(seed, band);
        let (a, b) = (helicity_classical(&u), helicity_fourier(&u));
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
    }

    #[test]
    fn cross_helicity_is_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (u, v) = (field(s1, 4), field(s2, 4));
        let (a, b) = (helicity_cross(&u, &v).unwrap(), helicity_cross(&v, &u).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn reflection_flips_helicity(seed in any::<u64>(), band in 1i64..6) {
        let u = random_aligned(grid(), band, seed);
        let h = helicity_fourier(&u);
        let hr = helicity_fourier(&u.reflect_x());
        prop_assert!(h > 0.0);
        prop_assert!((h + hr).abs() <= 1e-10 * h);
        prop_assert!((helicity_fourier(&u.scale(-1.0)) - h).abs() <= 1e-10 * h);
    }

    #[test]
    fn shells_telescope(base in class_a(), big_m in 0usize..8, k in prop::array::uniform3(-200i64..200)) {
        let fam = ShellFamily::new(base);
        let r = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
        let want = base.eval(0.5f64.powi(big_m as i32) * r);
        prop_assert!((fam.partial_sum(big_m, k) - want).abs() <= 1e-14);
    }

    #[test]
    fn shell_matrix_sums_to_helicity(seed in any::<u64>(), base in class_a()) {
        let u = field(seed, 5);
        let fam = ShellFamily::new(base);
        let big_m = ((5.0 * 3f64.sqrt() / base.delta()).log2().ceil() as usize) + 1;
        let total = shell_matrix(&u, &fam, big_m).total();
        let h = helicity_fourier(&u);
        prop_assert!((total - h).abs() <= 1e-10 * (1.0 + h.abs()), "{} vs {}", total, h);
    }

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), eps in 0.0f64..0.08) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = identity_plus(eps, &sample_unit_ball(&mut rng));
        let dec = decompose(&r).unwrap();
        prop_assert!(dec.coefficients.iter().all(|&c| c > 0.0));
        let back = reconstruct(&dec.directions, &dec.coefficients);
        let mut diff = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                diff[a][b] = back[a][b] - r[a][b];
            }
        }
        prop_assert!(frobenius(&diff) <= 1e-13);
    }

    #[test]
    fn mollifier_preserves_constants(p in profile(), eps in 0.0f64..2.0, c in prop::array::uniform3(-5.0f64..5.0)) {
        let m = Mollifier::new(p, eps).unwrap();
        prop_assert_eq!(m.eval([0, 0, 0]), 1.0);
        let u = VectorField3::from_fn(Grid::new(8).unwrap(), |_| c);
        let v = apply_multiplier(&m.multiplier(), &u).unwrap();
        prop_assert!(v.sub(&u).unwrap().linf_norm() <= 1e-13);
    }

    #[test]
    fn mollified_helicity_is_bounded_by_the_classical_one(seed in any::<u64>(), p in profile(), eps in 0.0f64..0.5) {
        let u = random_aligned(grid(), 4, seed);
        let m = Mollifier::new(p, eps).unwrap();
        let hm = helicity_mollified(&u, &m).unwrap();
        let h = helicity_fourier(&u);
        prop_assert!(hm >= -1e-12 && hm <= h * (1.0 + 1e-12));
    }
}
