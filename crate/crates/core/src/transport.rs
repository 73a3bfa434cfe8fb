//! Backward flow maps of smooth backgrounds and transported building blocks.
//!
//! `Φ(x, t₁)` is the foot at time `t₀` of the characteristic through `x` at `t₁`,
//! so `∂_t Φ + v·∇Φ = 0` with `Φ(·, t₀) = Id`. Both `Φ` and `∇Φ` are integrated
//! with classical RK4 along the characteristics.

use crate::blocks::PipeFlow;
use crate::error::{Error, Result};
use crate::helicity::helicity_cross_spectral;
use crate::spectral::{Grid, SpectralField3, TrigSeries3, VectorField3};
use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type Mat3 = [[f64; 3]; 3];

/// A smooth background velocity, evaluated off the grid.
pub trait Background: Sync {
    /// `(v, ∇v)` with `J[a][b] = ∂_b v_a`.
    fn velocity(&self, x: [f64; 3], t: f64) -> ([f64; 3], Mat3);

    /// Estimate of `sup ‖∇v‖` over space and the time window.
    fn gradient_bound(&self, t0: f64, t1: f64) -> f64;
}

fn op_norm(m: &Mat3) -> f64 {
    let a = Matrix3::from_fn(|i, j| m[i][j]);
    a.singular_values().max()
}

fn sampled_bound(f: impl Fn([f64; 3]) -> Mat3 + Sync) -> f64 {
    let n = 48;
    (0..n * n * n)
        .into_par_iter()
        .map(|i| {
            let x = [(i % n) as f64 / n as f64, ((i / n) % n) as f64 / n as f64, (i / (n * n)) as f64 / n as f64];
            op_norm(&f(x))
        })
        .reduce(|| 0.0, f64::max)
}

impl Background for TrigSeries3 {
    fn velocity(&self, x: [f64; 3], _t: f64) -> ([f64; 3], Mat3) {
        self.eval_with_jacobian(x)
    }

    fn gradient_bound(&self, _t0: f64, _t1: f64) -> f64 {
        sampled_bound(|x| self.eval_with_jacobian(x).1)
    }
}

/// A background given by a closure, with a declared gradient bound.
pub struct FnBackground<F> {
    pub f: F,
    pub bound: f64,
}

impl<F> Background for FnBackground<F>
where
    F: Fn([f64; 3], f64) -> ([f64; 3], Mat3) + Sync,
{
    fn velocity(&self, x: [f64; 3], t: f64) -> ([f64; 3], Mat3) {
        (self.f)(x, t)
    }

    fn gradient_bound(&self, _t0: f64, _t1: f64) -> f64 {
        self.bound
    }
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inv3(m: &Mat3) -> Mat3 {
    let d = det3(m);
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, e) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / d;
        }
    }
    r
}

/// Integrates the characteristic through `x` at `t1` back to `t0`; returns `(Φ(x), ∇Φ(x))`.
pub fn trace_back(v: &dyn Background, x: [f64; 3], t0: f64, t1: f64, steps: usize) -> ([f64; 3], Mat3) {
    let h = (t0 - t1) / steps as f64;
    let mut p = x;
    let mut j: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let add = |p: [f64; 3], d: [f64; 3], s: f64| [p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2]];
    let addm = |a: &Mat3, b: &Mat3, s: f64| {
        let mut c = *a;
        for i in 0..3 {
            for k in 0..3 {
                c[i][k] += s * b[i][k];
            }
        }
        c
    };
    for step in 0..steps {
        let t = t1 + step as f64 * h;
        let (v1, g1) = v.velocity(p, t);
        let k1 = matmul(&g1, &j);
        let (v2, g2) = v.velocity(add(p, v1, 0.5 * h), t + 0.5 * h);
        let k2 = matmul(&g2, &addm(&j, &k1, 0.5 * h));
        let (v3, g3) = v.velocity(add(p, v2, 0.5 * h), t + 0.5 * h);
        let k3 = matmul(&g3, &addm(&j, &k2, 0.5 * h));
        let (v4, g4) = v.velocity(add(p, v3, h), t + h);
        let k4 = matmul(&g4, &addm(&j, &k3, h));
        for d in 0..3 {
            p[d] += h / 6.0 * (v1[d] + 2.0 * v2[d] + 2.0 * v3[d] + v4[d]);
        }
        for a in 0..3 {
            for b in 0..3 {
                j[a][b] += h / 6.0 * (k1[a][b] + 2.0 * k2[a][b] + 2.0 * k3[a][b] + k4[a][b]);
            }
        }
    }
    (p, j)
}

fn check_cfl(v: &dyn Background, t0: f64, t1: f64, steps: usize) -> Result<f64> {
    let l = v.gradient_bound(t0, t1);
    let required = ((t1 - t0).abs() * l).ceil().max(1.0) as usize;
    if steps < required {
        return Err(Error::Cfl { steps, required });
    }
    Ok(l)
}

/// Sampled flow map on a grid.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub grid: Grid,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    /// `sup ‖∇v‖` used for the step check.
    pub gradient_bound: f64,
    /// `Φ(x)` at grid points, not reduced modulo 1.
    pub phi: Vec<[f64; 3]>,
    pub grad: Vec<Mat3>,
}

/// Solves the backward flow map at every grid point.
///
/// Each RK4 step must satisfy `dt ‖∇v‖_∞ ≤ 1`; otherwise the error carries the
/// required number of steps.
pub fn solve_flow(v: &dyn Background, grid: Grid, t0: f64, t1: f64, steps: usize) -> Result<FlowMap> {
    let gradient_bound = check_cfl(v, t0, t1, steps)?;
    let (phi, grad): (Vec<_>, Vec<_>) =
        (0..grid.len()).into_par_iter().map(|i| trace_back(v, grid.point(i), t0, t1, steps)).unzip();
    Ok(FlowMap { grid, t0, t1, steps, gradient_bound, phi, grad })
}

/// Flow map at arbitrary points.
pub fn solve_points(v: &dyn Background, pts: &[[f64; 3]], t0: f64, t1: f64, steps: usize) -> Result<Vec<([f64; 3], Mat3)>> {
    check_cfl(v, t0, t1, steps)?;
    Ok(pts.par_iter().map(|&x| trace_back(v, x, t0, t1, steps)).collect())
}

impl FlowMap {
    pub fn grad_inv(&self, idx: usize) -> Mat3 {
        inv3(&self.grad[idx])
    }

    pub fn det_error(&self) -> f64 {
        self.grad.par_iter().map(|m| (det3(m) - 1.0).abs()).reduce(|| 0.0, f64::max)
    }

    /// `max ‖∇Φ (∇Φ)^{-1} − Id‖_F`
    pub fn inverse_error(&self) -> f64 {
        self.grad
            .par_iter()
            .map(|m| {
                let p = matmul(m, &inv3(m));
                let mut e = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        e += (p[i][j] - if i == j { 1.0 } else { 0.0 }).powi(2);
                    }
                }
                e.sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `max ‖∇Φ − Id‖` in the operator norm.
    pub fn deformation(&self) -> f64 {
        self.grad
            .par_iter()
            .map(|m| {
                let mut d = *m;
                for i in 0..3 {
                    d[i][i] -= 1.0;
                }
                op_norm(&d)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `Φ(x) − x`, a periodic field.
    pub fn displacement(&self) -> VectorField3 {
        let pts: Vec<[f64; 3]> = (0..self.grid.len())
            .map(|i| {
                let x = self.grid.point(i);
                [self.phi[i][0] - x[0], self.phi[i][1] - x[1], self.phi[i][2] - x[2]]
            })
            .collect();
        VectorField3::from_points(self.grid, &pts)
    }

    /// Trigonometric interpolant of `Φ(x) − x` keeping modes above `tol` relative.
    pub fn interpolant(&self, tol: f64) -> TrigSeries3 {
        TrigSeries3::from_spectral(&self.displacement().to_spectral(), tol)
    }
}

/// Evaluates `Φ` at points from an interpolant of its displacement.
pub fn interpolate_map(interp: &TrigSeries3, pts: &[[f64; 3]]) -> Vec<[f64; 3]> {
    pts.par_iter()
        .map(|&x| {
            let d = interp.eval(x);
            [x[0] + d[0], x[1] + d[1], x[2] + d[2]]
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeformationReport {
    pub duration: f64,
    pub gradient_bound: f64,
    /// `max ‖∇Φ − Id‖`
    pub deformation: f64,
    /// `T L e^{TL}`
    pub bound: f64,
    /// `deformation / (T L)`, equal to 1 for a shear at leading order.
    pub linear_ratio: f64,
    pub within_bound: bool,
    pub det_error: f64,
}

pub fn deformation_bound_check(flow: &FlowMap) -> DeformationReport {
    let duration = (flow.t1 - flow.t0).abs();
    let tl = duration * flow.gradient_bound;
    let deformation = flow.deformation();
    let bound = tl * tl.exp();
    DeformationReport {
        duration,
        gradient_bound: flow.gradient_bound,
        deformation,
        bound,
        linear_ratio: if tl > 0.0 { deformation / tl } else { 0.0 },
        within_bound: deformation <= bound * (1.0 + 1e-9) + 1e-14,
        det_error: flow.det_error(),
    }
}

fn matvec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn transpose_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2])
}

/// `‖(∇Φ)^{-1}(W∘Φ) − curl((∇Φ)^T (U∘Φ))‖₂ / ‖W‖₂`.
pub fn transported_pipe_identity(pipe: &PipeFlow, flow: &FlowMap) -> Result<f64> {
    let grid = flow.grid;
    if pipe.grid != grid {
        return Err(Error::GridMismatch(pipe.grid.n(), grid.n()));
    }
    let required = 8.0 * pipe.spec.lambda as f64 * (1.0 + flow.deformation());
    if (grid.n() as f64) < required {
        return Err(Error::Unresolved { n: grid.n(), required });
    }
    let vals = pipe.eval_at(&flow.phi);
    let xi = pipe.xi();
    let mut lhs = vec![[0.0; 3]; grid.len()];
    let mut pot = vec![[0.0; 3]; grid.len()];
    lhs.par_iter_mut().zip(pot.par_iter_mut()).enumerate().for_each(|(i, (l, p))| {
        let w = [xi[0] * vals[i].rho, xi[1] * vals[i].rho, xi[2] * vals[i].rho];
        *l = matvec(&flow.grad_inv(i), w);
        *p = transpose_vec(&flow.grad[i], vals[i].u);
    });
    let lhs = VectorField3::from_points(grid, &lhs);
    let curl = VectorField3::from_points(grid, &pot).curl();
    Ok(lhs.sub(&curl)?.l2_norm() / pipe.w().l2_norm())
}

/// Helicity before and after pushing a vorticity forward by the flow:
/// `(Φ_*ω)(y) = (∇Φ(y))^{-1} ω(Φ(y))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PushForwardReport {
    pub before: f64,
    pub after: f64,
    pub relative_change: f64,
}

pub fn pushforward_helicity(omega: &SpectralField3, flow: &FlowMap) -> Result<PushForwardReport> {
    let grid = flow.grid;
    let u = omega.curl_inverse()?;
    let before = helicity_cross_spectral(&u, &u);
    let series = TrigSeries3::from_spectral(omega, 1e-15);
    let pushed: Vec<[f64; 3]> =
        (0..grid.len()).into_par_iter().map(|i| matvec(&flow.grad_inv(i), series.eval(flow.phi[i]))).collect();
    let mut ps = VectorField3::from_points(grid, &pushed).to_spectral().leray();
    for c in 0..3 {
        ps.comps[c][0] = Default::default();
    }
    let v = ps.curl_inverse()?;
    let after = helicity_cross_spectral(&v, &v);
    Ok(PushForwardReport { before, after, relative_change: (after - before).abs() / before.abs().max(1e-300) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_velocity_is_identity() {
        let v = FnBackground { f: |_x: [f64; 3], _t: f64| ([0.0; 3], [[0.0; 3]; 3]), bound: 0.0 };
        let g = Grid::new(8).unwrap();
        let f = solve_flow(&v, g, 0.0, 1.0, 1).unwrap();
        for i in 0..g.len() {
            assert_eq!(f.phi[i], g.point(i));
        }
        assert_eq!(f.deformation(), 0.0);
    }

    #[test]
    fn constant_velocity_translates() {
        let c = [0.3, -0.2, 0.1];
        let v = FnBackground { f: move |_x: [f64; 3], _t: f64| (c, [[0.0; 3]; 3]), bound: 0.0 };
        let (p, j) = trace_back(&v, [0.1, 0.2, 0.3], 0.0, 0.5, 4);
        for d in 0..3 {
            assert!((p[d] - ([0.1, 0.2, 0.3][d] - 0.5 * c[d])).abs() < 1e-15);
        }
        assert_eq!(j, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn cfl_violation_reports_steps() {
        let v = FnBackground { f: |_x: [f64; 3], _t: f64| ([0.0; 3], [[0.0; 3]; 3]), bound: 10.0 };
        let g = Grid::new(8).unwrap();
        match solve_flow(&v, g, 0.0, 1.0, 3) {
            Err(Error::Cfl { required, .. }) => assert_eq!(required, 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shear_flow_map_is_exact() {
        let a = 0.5;
        let v = FnBackground {
            f: move |x: [f64; 3], _t: f64| {
                let z = 2.0 * PI * x[2];
                ([a * z.sin(), 0.0, 0.0], [[0.0, 0.0, a * 2.0 * PI * z.cos()], [0.0; 3], [0.0; 3]])
            },
            bound: a * 2.0 * PI,
        };
        let (p, j) = trace_back(&v, [0.1, 0.2, 0.3], 0.0, 0.2, 8);
        assert!((p[0] - (0.1 - 0.2 * a * (2.0 * PI * 0.3).sin())).abs() < 1e-14);
        assert!((j[0][2] + 0.2 * a * 2.0 * PI * (2.0 * PI * 0.3).cos()).abs() < 1e-14);
    }

    #[test]
    fn inverse_matches() {
        let m = [[2.0, 1.0, 0.0], [0.5, 1.0, 0.3], [0.0, -0.2, 1.5]];
        let p = matmul(&m, &inv3(&m));
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
