//! Rational direction sets and the decomposition of symmetric tensors near the
//! identity into positive combinations of `ξ⊗ξ`.
//!
//! The base set is `Ξ₀ = {3/5 e_i ± 4/5 e_j : i < j}` with helical direction `e₂`.
//! Rotated copies `Ξ_j` come from rational rotations of the (3,4,5) family, found
//! by enumerating integer quaternions of norm 5 and keeping the first ones whose
//! images stay disjoint from every earlier set.

use crate::error::{Error, Result};
use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub type Sym3 = [[f64; 3]; 3];

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A unit vector with rational entries `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalDirection {
    pub num: [i64; 3],
    pub den: i64,
}

impl RationalDirection {
    pub fn new(num: [i64; 3], den: i64) -> Result<Self> {
        let n2: i64 = num.iter().map(|v| v * v).sum();
        if den <= 0 || n2 != den * den {
            return Err(Error::InvalidParams(format!("{num:?}/{den} is not a rational unit vector")));
        }
        let g = num.iter().fold(den, |g, &v| gcd(g, v));
        Ok(RationalDirection { num: [num[0] / g, num[1] / g, num[2] / g], den: den / g })
    }

    /// Normalizes an integer vector whose length is an integer.
    pub fn from_integer(v: [i64; 3]) -> Result<Self> {
        let n2: i64 = v.iter().map(|c| c * c).sum();
        let d = (n2 as f64).sqrt().round() as i64;
        Self::new(v, d)
    }

    pub fn axis(i: usize) -> Self {
        let mut num = [0; 3];
        num[i] = 1;
        RationalDirection { num, den: 1 }
    }

    pub fn to_f64(&self) -> [f64; 3] {
        let d = self.den as f64;
        [self.num[0] as f64 / d, self.num[1] as f64 / d, self.num[2] as f64 / d]
    }

    pub fn neg(&self) -> Self {
        RationalDirection { num: [-self.num[0], -self.num[1], -self.num[2]], den: self.den }
    }

    pub fn is_axis(&self) -> bool {
        self.den == 1
    }

    /// Same line through the origin (`±`).
    pub fn same_line(&self, other: &Self) -> bool {
        self == other || *self == other.neg()
    }

    pub fn dot(&self, other: &Self) -> (i64, i64) {
        let n: i64 = (0..3).map(|i| self.num[i] * other.num[i]).sum();
        (n, self.den * other.den)
    }

    pub fn cross(&self, other: &Self) -> Result<Self> {
        let a = self.num;
        let b = other.num;
        let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        Self::new(c, self.den * other.den)
    }
}

/// An orthogonal matrix with rational entries `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRotation {
    pub num: [[i64; 3]; 3],
    pub den: i64,
}

impl RationalRotation {
    pub fn identity() -> Self {
        RationalRotation { num: [[1, 0, 0], [0, 1, 0], [0, 0, 1]], den: 1 }
    }

    /// Rotation of the unit quaternion `(a + b i + c j + d k)/|q|`.
    pub fn from_quaternion(a: i64, b: i64, c: i64, d: i64) -> Self {
        let n = a * a + b * b + c * c + d * d;
        let num = [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
        ];
        RationalRotation { num, den: n }
    }

    pub fn apply(&self, v: &RationalDirection) -> RationalDirection {
        let mut out = [0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.num[i][j] * v.num[j]).sum();
        }
        RationalDirection::new(out, self.den * v.den).expect("rotation preserves length")
    }

    pub fn is_orthogonal(&self) -> bool {
        for i in 0..3 {
            for j in 0..3 {
                let s: i64 = (0..3).map(|k| self.num[k][i] * self.num[k][j]).sum();
                if s != if i == j { self.den * self.den } else { 0 } {
                    return false;
                }
            }
        }
        true
    }
}

/// Six vector directions plus one helical direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub index: usize,
    pub rotation: RationalRotation,
    pub xi: Vec<RationalDirection>,
    pub helical: RationalDirection,
}

/// `Ξ₀` in the fixed order `(i,j) = (1,2), (1,3), (2,3)`, `+` before `−`.
pub fn base_set() -> DirectionSet {
    let mut xi = Vec::with_capacity(6);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for s in [1, -1] {
            let mut v = [0; 3];
            v[i] = 3;
            v[j] = 4 * s;
            xi.push(RationalDirection { num: v, den: 5 });
        }
    }
    DirectionSet { index: 0, rotation: RationalRotation::identity(), xi, helical: RationalDirection::axis(1) }
}

impl DirectionSet {
    pub fn rotated(&self, rot: RationalRotation, index: usize) -> DirectionSet {
        DirectionSet {
            index,
            rotation: rot,
            xi: self.xi.iter().map(|v| rot.apply(v)).collect(),
            helical: rot.apply(&self.helical),
        }
    }

    fn all(&self) -> Vec<RationalDirection> {
        let mut v = self.xi.clone();
        v.push(self.helical);
        v
    }

    /// True when no line of `self` (vector or helical) is a line of `other`.
    pub fn disjoint_from(&self, other: &DirectionSet) -> bool {
        let a = self.all();
        let b = other.all();
        a.iter().all(|x| b.iter().all(|y| !x.same_line(y)))
    }

    pub fn contains_e2(&self) -> bool {
        self.xi.iter().any(|v| v.same_line(&RationalDirection::axis(1)))
    }

    pub fn xi_f64(&self) -> Vec<[f64; 3]> {
        self.xi.iter().map(|v| v.to_f64()).collect()
    }
}

fn candidate_rotations() -> Vec<RationalRotation> {
    let mut out = Vec::new();
    for (a, b) in [(2, 1), (1, 2)] {
        for axis in 0..3 {
            for s in [1, -1] {
                let mut q = [a, 0, 0, 0];
                q[1 + axis] = s * b;
                out.push(RationalRotation::from_quaternion(q[0], q[1], q[2], q[3]));
            }
        }
    }
    // then primitive quaternions of increasing norm
    let mut rest = Vec::new();
    for a in 1..=4i64 {
        for b in -4..=4i64 {
            for c in -4..=4i64 {
                for d in -4..=4i64 {
                    let n = a * a + b * b + c * c + d * d;
                    if n > 5 && [b, c, d].iter().fold(a, |g, &v| gcd(g, v)) == 1 {
                        rest.push((n, RationalRotation::from_quaternion(a, b, c, d)));
                    }
                }
            }
        }
    }
    rest.sort_by_key(|(n, _)| *n);
    out.extend(rest.into_iter().map(|(_, r)| r));
    out
}

/// The first `count` direction sets `Ξ_0, …, Ξ_{count-1}`, pairwise disjoint.
pub fn direction_sets(count: usize) -> Result<Vec<DirectionSet>> {
    let base = base_set();
    let mut sets = vec![base.clone()];
    let mut candidates = candidate_rotations().into_iter();
    while sets.len() < count {
        let next = loop {
            let Some(rot) = candidates.next() else {
                return Err(Error::RotationNotFound(count));
            };
            let s = base.rotated(rot, sets.len());
            if !s.contains_e2() && sets.iter().all(|p| p.disjoint_from(&s)) {
                break s;
            }
        };
        sets.push(next);
    }
    Ok(sets)
}

/// `Ξ_j` from [`direction_sets`].
pub fn rotate_set(j: usize) -> Result<DirectionSet> {
    Ok(direction_sets(j + 1)?.pop().unwrap())
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn system(dirs: &[[f64; 3]]) -> Matrix6<f64> {
    Matrix6::from_fn(|row, col| {
        let (a, b) = PAIRS[row];
        dirs[col][a] * dirs[col][b]
    })
}

struct Solver {
    inverse: Matrix6<f64>,
    condition: f64,
    dirs: Vec<[f64; 3]>,
}

impl Solver {
    fn new(dirs: Vec<[f64; 3]>) -> Result<Self> {
        let a = system(&dirs);
        let sv = a.singular_values();
        let condition = sv.max() / sv.min();
        if !(condition <= 1e8) {
            return Err(Error::IllConditioned(condition));
        }
        let inverse = a.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
        Ok(Solver { inverse, condition, dirs })
    }

    fn coefficients(&self, r: &Sym3) -> [f64; 6] {
        let rhs = Vector6::from_fn(|row, _| {
            let (a, b) = PAIRS[row];
            r[a][b]
        });
        let c = self.inverse * rhs;
        [c[0], c[1], c[2], c[3], c[4], c[5]]
    }
}

fn base_solver() -> &'static Solver {
    static S: OnceLock<Solver> = OnceLock::new();
    S.get_or_init(|| Solver::new(base_set().xi_f64()).expect("base system is well conditioned"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorDecomposition {
    pub input: Sym3,
    pub directions: Vec<[f64; 3]>,
    /// `γ_ξ²`, in the order of the direction set.
    pub coefficients: [f64; 6],
    pub residual: f64,
    pub condition: f64,
}

impl TensorDecomposition {
    pub fn gamma(&self) -> [f64; 6] {
        self.coefficients.map(f64::sqrt)
    }
}

pub fn reconstruct(dirs: &[[f64; 3]], coefficients: &[f64; 6]) -> Sym3 {
    let mut out = [[0.0; 3]; 3];
    for (xi, c) in dirs.iter().zip(coefficients) {
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] += c * xi[a] * xi[b];
            }
        }
    }
    out
}

pub fn frobenius(a: &Sym3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn solve(solver: &Solver, r: &Sym3) -> Result<TensorDecomposition> {
    for a in 0..3 {
        for b in 0..a {
            if (r[a][b] - r[b][a]).abs() > 1e-12 * (1.0 + frobenius(r)) {
                return Err(Error::InvalidParams("tensor is not symmetric".into()));
            }
        }
    }
    let c = solver.coefficients(r);
    for (i, &v) in c.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::OutOfCone { direction: solver.dirs[i], coefficient: v });
        }
    }
    let back = reconstruct(&solver.dirs, &c);
    let mut diff = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            diff[a][b] = back[a][b] - r[a][b];
        }
    }
    Ok(TensorDecomposition {
        input: *r,
        directions: solver.dirs.clone(),
        coefficients: c,
        residual: frobenius(&diff),
        condition: solver.condition,
    })
}

/// Writes `R = Σ γ_ξ² ξ⊗ξ` over `Ξ₀`; fails with [`Error::OutOfCone`] unless every
/// coefficient is strictly positive.
pub fn decompose(r: &Sym3) -> Result<TensorDecomposition> {
    solve(base_solver(), r)
}

/// Same as [`decompose`] over an arbitrary set of six directions.
pub fn decompose_in(set: &DirectionSet, r: &Sym3) -> Result<TensorDecomposition> {
    solve(&Solver::new(set.xi_f64())?, r)
}

/// Point uniformly distributed in the unit Frobenius ball of symmetric matrices.
pub fn sample_unit_ball(rng: &mut impl Rng) -> Sym3 {
    let mut v = [0.0; 6];
    let mut norm2 = 0.0;
    for c in v.iter_mut() {
        // Box–Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        *c = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        norm2 += *c * *c;
    }
    let radius: f64 = rng.gen::<f64>().powf(1.0 / 6.0) / norm2.sqrt();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (d0, d1, d2) = (v[0] * radius, v[1] * radius, v[2] * radius);
    let (o01, o02, o12) = (v[3] * radius * s, v[4] * radius * s, v[5] * radius * s);
    [[d0, o01, o02], [o01, d1, o12], [o02, o12, d2]]
}

pub fn identity_plus(eps: f64, x: &Sym3) -> Sym3 {
    let mut r = *x;
    for (a, row) in r.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = eps * *v + if a == b { 1.0 } else { 0.0 };
        }
    }
    r
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeRadius {
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Largest `ε` such that every sampled `Id + ε X`, `‖X‖_F ≤ 1`, decomposes, by bisection.
pub fn cone_radius_estimate(seed: u64, samples: usize) -> ConeRadius {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Sym3> = (0..samples).map(|_| sample_unit_ball(&mut rng)).collect();
    let accepts = |eps: f64| pts.iter().all(|x| decompose(&identity_plus(eps, x)).is_ok());
    let (mut lo, mut hi) = (0.0, 1.0);
    while accepts(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if accepts(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ConeRadius { eps: lo, samples, seed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_set_is_rational_unit() {
        for v in base_set().xi {
            assert_eq!(v.num.iter().map(|c| c * c).sum::<i64>(), v.den * v.den);
        }
    }

    #[test]
    fn identity_coefficients_pair_up() {
        let d = decompose(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let c = d.coefficients;
        for p in 0..3 {
            assert!((c[2 * p] - c[2 * p + 1]).abs() < 1e-14);
        }
        assert!(d.residual < 1e-14);
    }

    #[test]
    fn indefinite_tensor_is_rejected() {
        let e = decompose(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]).unwrap_err();
        assert!(matches!(e, Error::OutOfCone { .. }));
    }

    #[test]
    fn rotations_are_orthogonal_and_sets_disjoint() {
        let sets = direction_sets(2).unwrap();
        assert_eq!(sets[0].rotation, RationalRotation::identity());
        assert!(sets[1].rotation.is_orthogonal());
        assert!(sets[0].disjoint_from(&sets[1]));
        assert!(!sets[1].contains_e2());
    }

    #[test]
    fn many_disjoint_sets() {
        let sets = direction_sets(6).unwrap();
        for (i, a) in sets.iter().enumerate() {
            assert!(a.rotation.is_orthogonal());
            for b in &sets[i + 1..] {
                assert!(a.disjoint_from(b));
            }
        }
    }

    #[test]
    fn quaternion_rotation_of_norm_five() {
        let r = RationalRotation::from_quaternion(2, 0, 0, 1);
        assert_eq!(r.den, 5);
        assert_eq!(r.num[0], [3, -4, 0]);
        assert!(r.is_orthogonal());
    }
}
