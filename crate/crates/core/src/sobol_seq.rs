//! Low-discrepancy digital sequence in base 2 (Sobol construction with
//! Joe-Kuo direction numbers, Gray-code ordering, 32-bit precision).
//!
//! Dimension 1 is the van der Corput sequence; higher dimensions use the
//! primitive-polynomial recurrence. Point 0 is the origin. The first
//! `2^m` points of every 1D projection hit each dyadic interval of width
//! `2^-m` exactly once, which is the property the variance-based
//! estimators lean on.

use crate::error::{Error, Result};

/// Direction-number parameters `(s, a, m)` per dimension: the degree of
/// the primitive polynomial, its inner coefficient bits, and the initial
/// odd direction integers. Values are the standard Joe-Kuo D6 table.
const DIRECTIONS: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

/// Highest supported dimension.
pub const MAX_DIMENSION: usize = DIRECTIONS.len() + 1;

const BITS: u32 = 32;
const SCALE: f64 = 1.0 / 4294967296.0; // 2^-32

/// Incremental Sobol sequence generator.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    dim: usize,
    /// `v[d][k]` = direction integer of bit `k` in dimension `d`.
    v: Vec<[u32; BITS as usize]>,
    /// Current Gray-code state per dimension.
    x: Vec<u32>,
    /// Index of the next point to emit.
    index: u64,
}

impl SobolSequence {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(Error::Domain(format!(
                "sobol sequence supports dimensions 1..={MAX_DIMENSION}, got {dim}"
            )));
        }
        let mut v = Vec::with_capacity(dim);
        // Dimension 1: van der Corput, v_k = 2^(32-k).
        let mut first = [0u32; BITS as usize];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - k as u32);
        }
        v.push(first);
        for d in 1..dim {
            let (s, a, m_init) = DIRECTIONS[d - 1];
            let s = s as usize;
            let mut m = [0u32; BITS as usize];
            m[..s].copy_from_slice(m_init);
            for k in s..BITS as usize {
                // m_k = 2^s * m_{k-s} XOR m_{k-s} XOR sum of tap terms.
                let mut val = (m[k - s] << s) ^ m[k - s];
                for i in 1..s {
                    if (a >> (s - 1 - i)) & 1 == 1 {
                        val ^= m[k - i] << i;
                    }
                }
                m[k] = val;
            }
            let mut dirs = [0u32; BITS as usize];
            for k in 0..BITS as usize {
                dirs[k] = m[k] << (BITS - 1 - k as u32);
            }
            v.push(dirs);
        }
        Ok(Self { dim, v, x: vec![0; dim], index: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Next point of the sequence, each coordinate in `[0, 1)`.
    pub fn next_point(&mut self) -> Vec<f64> {
        if self.index > 0 {
            // Gray-code update: flip the direction of the lowest zero bit
            // of the previous index.
            let bit = self.index.trailing_zeros();
            debug_assert!(bit < BITS);
            for d in 0..self.dim {
                self.x[d] ^= self.v[d][bit as usize];
            }
        }
        self.index += 1;
        self.x.iter().map(|&u| u as f64 * SCALE).collect()
    }

    /// First `n` points as rows.
    pub fn take_points(&mut self, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.next_point()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference points generated with an independent, widely validated
    /// implementation of the same Joe-Kuo construction (unscrambled,
    /// Gray-code order); frozen before this module was written.
    const REFERENCE: [(usize, [f64; 8]); 8] = [
        (1, [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]),
        (2, [0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75]),
        (3, [0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25]),
        (4, [0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875]),
        (7, [0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625]),
        (16, [0.09375, 0.46875, 0.46875, 0.65625, 0.28125, 0.96875, 0.53125, 0.84375]),
        (255, [0.00390625, 0.99609375, 0.76953125, 0.57421875, 0.61328125, 0.98046875, 0.88671875, 0.17578125]),
        (271, [0.068359375, 0.560546875, 0.240234375, 0.107421875, 0.466796875, 0.169921875, 0.552734375, 0.044921875]),
    ];

    #[test]
    fn matches_frozen_reference_points() {
        let mut seq = SobolSequence::new(8).unwrap();
        let pts = seq.take_points(272);
        assert!(pts[0].iter().all(|&v| v == 0.0));
        for (idx, expected) in REFERENCE {
            for d in 0..8 {
                assert_eq!(
                    pts[idx][d], expected[d],
                    "mismatch at point {idx} dim {d}"
                );
            }
        }
    }

    #[test]
    fn one_dimensional_projections_stratify_perfectly() {
        // First 2^m points: every dyadic bin of width 2^-m holds exactly
        // one point, in every dimension.
        for m in [4usize, 7] {
            let n = 1 << m;
            let mut seq = SobolSequence::new(MAX_DIMENSION).unwrap();
            let pts = seq.take_points(n);
            for d in 0..MAX_DIMENSION {
                let mut counts = vec![0usize; n];
                for p in &pts {
                    counts[(p[d] * n as f64) as usize] += 1;
                }
                assert!(
                    counts.iter().all(|&c| c == 1),
                    "dim {d} not stratified at m = {m}"
                );
            }
        }
    }

    #[test]
    fn leading_pair_forms_a_zero_two_net() {
        // Dimensions (1,2) form a (0,2)-net: each of the 16 boxes of a
        // 4x4 partition of the first 16 points holds exactly one point.
        let mut seq = SobolSequence::new(2).unwrap();
        let pts = seq.take_points(16);
        let mut counts = [[0usize; 4]; 4];
        for p in &pts {
            counts[(p[0] * 4.0) as usize][(p[1] * 4.0) as usize] += 1;
        }
        for row in counts {
            assert!(row.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn rejects_unsupported_dimensions() {
        assert!(SobolSequence::new(0).is_err());
        assert!(SobolSequence::new(MAX_DIMENSION + 1).is_err());
        assert!(SobolSequence::new(MAX_DIMENSION).is_ok());
    }

    #[test]
    fn all_coordinates_in_unit_interval() {
        let mut seq = SobolSequence::new(6).unwrap();
        for p in seq.take_points(1000) {
            assert!(p.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
    }
}
