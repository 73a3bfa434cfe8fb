use crate::error::{Error, Result};
use crate::geometry::RationalDirection;

/// Right-handed rational orthonormal frame `(ξ, ξ', ξ'')` with `ξ'' = ξ × ξ'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub xi: RationalDirection,
    pub xi1: RationalDirection,
    pub xi2: RationalDirection,
}

impl Frame {
    /// Searches rational unit vectors orthogonal to `ξ` for the frame with the
    /// smallest denominators; ties go to the lexicographically largest `ξ'`.
    pub fn for_direction(xi: RationalDirection) -> Result<Frame> {
        let mut best: Option<(i64, Frame)> = None;
        let lim = 25i64;
        for a in (-lim..=lim).rev() {
            for b in (-lim..=lim).rev() {
                for c in (-lim..=lim).rev() {
                    let v = [a, b, c];
                    let n2 = a * a + b * b + c * c;
                    if n2 == 0 || v.iter().zip(&xi.num).map(|(p, q)| p * q).sum::<i64>() != 0 {
                        continue;
                    }
                    let d = (n2 as f64).sqrt().round() as i64;
                    if d * d != n2 {
                        continue;
                    }
                    let Ok(xi1) = RationalDirection::new(v, d) else { continue };
                    if xi1.num != v {
                        continue;
                    }
                    let xi2 = xi.cross(&xi1)?;
                    let cost = xi1.den * xi2.den;
                    if best.is_none_or(|(c, _)| cost < c) {
                        best = Some((cost, Frame { xi, xi1, xi2 }));
                    }
                }
            }
        }
        best.map(|(_, f)| f).ok_or_else(|| Error::InvalidPipe(format!("no rational frame for {xi:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_frame_is_trivial() {
        let f = Frame::for_direction(RationalDirection::axis(2)).unwrap();
        assert_eq!(f.xi1.den * f.xi2.den, 1);
    }

    #[test]
    fn oblique_frame_is_orthonormal() {
        let xi = RationalDirection::new([0, 3, 4], 5).unwrap();
        let f = Frame::for_direction(xi).unwrap();
        assert_eq!(f.xi1.dot(&xi).0, 0);
        assert_eq!(f.xi2.dot(&xi).0, 0);
        assert_eq!(f.xi1.dot(&f.xi2).0, 0);
        assert_eq!(f.xi1.cross(&f.xi2).unwrap(), xi);
        assert_eq!(f.xi1.den * f.xi2.den, 5);
    }
}
