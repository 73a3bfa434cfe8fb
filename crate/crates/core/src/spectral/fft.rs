use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized 3D transform of an `n^3` array laid out as `x + n(y + n z)`.
pub fn fft3(data: &mut [Complex64], n: usize, inverse: bool) {
    assert_eq!(data.len(), n * n * n);
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];

    // x lines are contiguous
    plan.process_with_scratch(data, &mut scratch);

    let mut buf = vec![Complex64::default(); n * n];
    // y lines: one z-slab at a time
    for z in 0..n {
        let slab = &mut data[z * n * n..(z + 1) * n * n];
        for y in 0..n {
            for x in 0..n {
                buf[x * n + y] = slab[x + n * y];
            }
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for y in 0..n {
            for x in 0..n {
                slab[x + n * y] = buf[x * n + y];
            }
        }
    }
    // z lines: one y-row at a time
    for y in 0..n {
        for z in 0..n {
            let row = &data[n * (y + n * z)..n * (y + n * z) + n];
            for x in 0..n {
                buf[x * n + z] = row[x];
            }
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for z in 0..n {
            let row = &mut data[n * (y + n * z)..n * (y + n * z) + n];
            for x in 0..n {
                row[x] = buf[x * n + z];
            }
        }
    }
}

/// Unnormalized 2D transform of an `n^2` array laid out as `a + n b`.
pub fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    assert_eq!(data.len(), n * n);
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(data, &mut scratch);
    let mut buf = vec![Complex64::default(); n * n];
    for b in 0..n {
        for a in 0..n {
            buf[a * n + b] = data[a + n * b];
        }
    }
    plan.process_with_scratch(&mut buf, &mut scratch);
    for b in 0..n {
        for a in 0..n {
            data[a + n * b] = buf[a * n + b];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive3(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n * n];
        for kz in 0..n {
            for ky in 0..n {
                for kx in 0..n {
                    let mut acc = Complex64::default();
                    for z in 0..n {
                        for y in 0..n {
                            for x in 0..n {
                                let ph = -2.0 * std::f64::consts::PI
                                    * ((kx * x + ky * y + kz * z) as f64)
                                    / n as f64;
                                acc += data[x + n * (y + n * z)] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[kx + n * (ky + n * kz)] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_direct_sum() {
        let n = 4;
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        fft3(&mut fast, n, false);
        let slow = naive3(&data, n);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64).sqrt(), 0.0))
            .collect();
        let mut work = data.clone();
        fft3(&mut work, n, false);
        fft3(&mut work, n, true);
        let scale = (n * n * n) as f64;
        for (a, b) in work.iter().zip(&data) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }
}
