//! Small quadrature helpers: Gauss–Legendre rules and integer-order Bessel functions.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels of order `m`.
#[derive(Clone, Debug)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    pub fn new(a: f64, b: f64, panels: usize, m: usize) -> Self {
        let (x, w) = gauss_legendre(m);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * m);
        let mut weights = Vec::with_capacity(panels * m);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for j in 0..m {
                nodes.push(lo + 0.5 * h * (x[j] + 1.0));
                weights.push(0.5 * h * w[j]);
            }
        }
        Composite { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Bessel function `J_n(x)` of integer order.
///
/// Uses the power series for small arguments and the trapezoidal rule on
/// `(1/π) ∫_0^π cos(nτ - x sin τ) dτ`, which converges geometrically, otherwise.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 6.0 {
        let h = 0.5 * x;
        let mut term = 1.0;
        for j in 1..=n {
            term *= h / j as f64;
        }
        let mut sum = term;
        for m in 1..200 {
            term *= -h * h / (m as f64 * (m + n) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        return sum;
    }
    let m = 64 + 2 * (x as usize + n as usize);
    let h = PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for j in 1..m {
        s += f(j as f64 * h);
    }
    s * h / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let s0: f64 = w.iter().sum();
        assert!((s0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bessel_reference_values() {
        // tabulated values
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 10.0) - 0.043_472_746_168_861_44).abs() < 1e-13);
        assert!((bessel_j(5, 3.0) - 0.043_028_434_877_047_58).abs() < 1e-14);
        assert!((bessel_j(0, 20.0) - 0.167_024_664_340_583_1).abs() < 1e-13);
    }

    #[test]
    fn bessel_branches_agree() {
        for n in 0..12 {
            let a = bessel_j(n, 5.999_999_999);
            let m = 400;
            let h = PI / m as f64;
            let f = |t: f64| (n as f64 * t - 6.0 * t.sin()).cos();
            let mut s = 0.5 * (f(0.0) + f(PI));
            for j in 1..m {
                s += f(j as f64 * h);
            }
            assert!((a - s * h / PI).abs() < 1e-9);
        }
    }
}
