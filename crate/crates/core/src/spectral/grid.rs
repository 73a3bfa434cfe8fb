use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid with `n` points per side on the unit torus `[0,1)^3`.
///
/// Points are stored with `x` fastest: `index = x + n (y + n z)`. Spectral
/// arrays share that layout, with the signed wavenumber `i` for `i < n/2` and
/// `i - n` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Grid> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Grid { n })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn len(self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn spacing(self) -> f64 {
        1.0 / self.n as f64
    }

    /// Largest wavenumber magnitude that is kept by derivative operators.
    pub fn kmax(self) -> i64 {
        self.n as i64 / 2 - 1
    }

    #[inline]
    pub fn index(self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unindex(self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn point(self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unindex(idx);
        let h = self.spacing();
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }

    #[inline]
    pub fn wavenumber(self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn mode(self, idx: usize) -> [i64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.wavenumber(i), self.wavenumber(j), self.wavenumber(k)]
    }

    /// Storage slot of wavenumber `k`, folded into the grid band.
    #[inline]
    pub fn mode_index(self, k: [i64; 3]) -> usize {
        let n = self.n as i64;
        let w = |c: i64| c.rem_euclid(n) as usize;
        self.index(w(k[0]), w(k[1]), w(k[2]))
    }

    /// True when any component of the mode is the unpaired `-n/2`.
    #[inline]
    pub fn is_nyquist(self, idx: usize) -> bool {
        let [i, j, k] = self.unindex(idx);
        let h = self.n / 2;
        i == h || j == h || k == h
    }

    /// Storage slot of `-k`.
    #[inline]
    pub fn neg_index(self, idx: usize) -> usize {
        let n = self.n;
        let [i, j, k] = self.unindex(idx);
        self.index((n - i) % n, (n - j) % n, (n - k) % n)
    }

    /// Signed wavenumbers along one axis, in storage order.
    pub fn wavenumbers(self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(4).is_err());
        assert!(Grid::new(12).is_err());
        assert!(Grid::new(16).is_ok());
    }

    #[test]
    fn mode_round_trip() {
        let g = Grid::new(8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.mode_index(g.mode(idx)), idx);
            let k = g.mode(idx);
            if !g.is_nyquist(idx) {
                assert_eq!(g.mode(g.neg_index(idx)), [-k[0], -k[1], -k[2]]);
            }
        }
    }
}
