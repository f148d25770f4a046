use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform N×N grid on the unit torus [0,1)².
///
/// Points are x = (i/N, j/N); all distances are geodesic (componentwise
/// wrapped to [-1/2, 1/2)), so the largest possible distance is √2/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    /// Requires N even and at least 8 (dealiasing and the Hermitian mode
    /// layout both assume this).
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid resolution must be an even integer >= 8, got {n}"
            )));
        }
        Ok(GridSpec { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid nodes, N².
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Grid spacing 1/N.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Row-major index of node (i, j).
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Coordinates of node (i, j).
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 / self.n as f64, j as f64 / self.n as f64]
    }

    /// Signed frequency of FFT bin `i`: 0,1,..,N/2,-(N/2-1),..,-1 folded so
    /// the Nyquist bin N/2 maps to -N/2.
    #[inline]
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT bin of a signed frequency.
    #[inline]
    pub fn bin(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Wrap a coordinate difference to the geodesic representative in
    /// [-1/2, 1/2).
    #[inline]
    pub fn wrap_diff(d: f64) -> f64 {
        let mut r = d - d.round();
        if r >= 0.5 {
            r -= 1.0;
        } else if r < -0.5 {
            r += 1.0;
        }
        r
    }

    /// Wrap a coordinate to [0, 1).
    #[inline]
    pub fn wrap_coord(x: f64) -> f64 {
        let r = x - x.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    /// Geodesic distance between two points of the torus.
    pub fn geodesic_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
        let d0 = Self::wrap_diff(a[0] - b[0]);
        let d1 = Self::wrap_diff(a[1] - b[1]);
        (d0 * d0 + d1 * d1).sqrt()
    }

    /// Geodesic length of the lattice displacement (a, b) in grid units.
    pub fn shift_distance(&self, a: usize, b: usize) -> f64 {
        let h = self.spacing();
        let da = a.min(self.n - a) as f64 * h;
        let db = b.min(self.n - b) as f64 * h;
        (da * da + db * db).sqrt()
    }

    /// Signed geodesic representative of the lattice displacement (a, b),
    /// components in [-1/2, 1/2).
    pub fn shift_vector(&self, a: usize, b: usize) -> [f64; 2] {
        [
            self.freq(a) as f64 / self.n as f64,
            self.freq(b) as f64 / self.n as f64,
        ]
    }

    /// All nonzero lattice displacements with geodesic length strictly below
    /// `radius`, as (a, b, |z|) with a, b in [0, N).
    pub fn displacements_within(&self, radius: f64) -> Vec<Shift> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if a == 0 && b == 0 {
                    continue;
                }
                let dist = self.shift_distance(a, b);
                if dist < radius {
                    out.push(Shift { a, b, dist });
                }
            }
        }
        out
    }
}

/// A lattice displacement together with its geodesic length.
#[derive(Debug, Clone, Copy)]
pub struct Shift {
    pub a: usize,
    pub b: usize,
    pub dist: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(GridSpec::new(7).is_err());
        assert!(GridSpec::new(6).is_err());
        assert!(GridSpec::new(9).is_err());
        assert!(GridSpec::new(8).is_ok());
    }

    #[test]
    fn freq_layout_is_signed_with_negative_nyquist() {
        let g = GridSpec::new(8).unwrap();
        let freqs: Vec<i64> = (0..8).map(|i| g.freq(i)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for k in -4..4 {
            assert_eq!(g.freq(g.bin(k)), k);
        }
    }

    #[test]
    fn geodesic_distance_wraps() {
        let d = GridSpec::geodesic_distance([0.05, 0.0], [0.95, 0.0]);
        assert!((d - 0.1).abs() < 1e-15);
        // farthest point pair on the unit torus
        let far = GridSpec::geodesic_distance([0.0, 0.0], [0.5, 0.5]);
        assert!((far - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shift_vector_matches_shift_distance() {
        let g = GridSpec::new(16).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let v = g.shift_vector(a, b);
                let d = g.shift_distance(a, b);
                assert!((v[0].hypot(v[1]) - d).abs() < 1e-14);
                assert!((-0.5..0.5).contains(&v[0]));
                assert!((-0.5..0.5).contains(&v[1]));
            }
        }
    }

    #[test]
    fn displacement_ball_excludes_origin_and_respects_radius() {
        let g = GridSpec::new(16).unwrap();
        let shifts = g.displacements_within(1.0 / 3.0);
        assert!(shifts.iter().all(|s| (s.a, s.b) != (0, 0)));
        assert!(shifts.iter().all(|s| s.dist < 1.0 / 3.0));
        // ball of radius 1/3 on a 16-grid: compare against a direct count
        let mut count = 0;
        for a in 0..16usize {
            for b in 0..16usize {
                if (a, b) == (0, 0) {
                    continue;
                }
                if g.shift_distance(a, b) < 1.0 / 3.0 {
                    count += 1;
                }
            }
        }
        assert_eq!(shifts.len(), count);
    }
}
