//! Dense-bitset Gauss-Jordan elimination over GF(2).
//!
//! The PRC surrogate needs uniform solutions of a sparse parity system
//! `P c = syndrome`. The system is fixed per key, so it is reduced once to
//! reduced row-echelon form; sampling a fresh uniform codeword afterwards is
//! one pass of free-variable assignment plus back-substitution.

use crate::latent::BitString;
use crate::{Error, Result};
use rand::Rng;

/// A GF(2) linear system in reduced row-echelon form.
#[derive(Debug, Clone)]
pub struct Gf2Echelon {
    dim: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
    rhs: Vec<bool>,
    pivot_cols: Vec<usize>,
    free_cols: Vec<usize>,
}

fn first_set_bit(row: &[u64]) -> Option<usize> {
    for (w, &word) in row.iter().enumerate() {
        if word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

#[inline]
fn get_bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

impl Gf2Echelon {
    /// Reduce the system `for each r: XOR of c[j], j in rows[r], equals rhs[r]`.
    ///
    /// Errors with [`Error::InconsistentSystem`] if the constraints
    /// contradict each other. Duplicate indices inside one row cancel, as
    /// GF(2) arithmetic dictates.
    pub fn from_sparse(parity_rows: &[Vec<usize>], rhs: &BitString, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("GF(2) system over zero variables".into()));
        }
        if parity_rows.len() != rhs.len() {
            return Err(Error::DimensionMismatch { expected: parity_rows.len(), got: rhs.len() });
        }
        let words = dim.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let mut rhs_out: Vec<bool> = Vec::new();
        let mut pivot_cols: Vec<usize> = Vec::new();

        for (r, indices) in parity_rows.iter().enumerate() {
            let mut row = vec![0u64; words];
            for &j in indices {
                if j >= dim {
                    return Err(Error::InvalidParameter(format!(
                        "parity index {j} out of range for dimension {dim}"
                    )));
                }
                row[j / 64] ^= 1u64 << (j % 64);
            }
            let mut b = rhs.get(r);
            // Reduce against the pivots collected so far.
            for (i, pc) in pivot_cols.iter().enumerate() {
                if get_bit(&row, *pc) {
                    let prev = rows[i].clone();
                    xor_into(&mut row, &prev);
                    b ^= rhs_out[i];
                }
            }
            match first_set_bit(&row) {
                None => {
                    if b {
                        return Err(Error::InconsistentSystem);
                    }
                }
                Some(pc) => {
                    // Back-reduce earlier rows so the form stays fully reduced.
                    for i in 0..rows.len() {
                        if get_bit(&rows[i], pc) {
                            let row_copy = row.clone();
                            xor_into(&mut rows[i], &row_copy);
                            rhs_out[i] ^= b;
                        }
                    }
                    rows.push(row);
                    rhs_out.push(b);
                    pivot_cols.push(pc);
                }
            }
        }

        let pivot_set: std::collections::HashSet<usize> = pivot_cols.iter().copied().collect();
        let free_cols = (0..dim).filter(|c| !pivot_set.contains(c)).collect();
        Ok(Self { dim, words, rows, rhs: rhs_out, pivot_cols, free_cols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Draw a solution uniformly at random: free variables are independent
    /// fair bits, pivot variables follow by back-substitution. Every solution
    /// of the system is produced with equal probability.
    pub fn sample_solution<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        let mut bits = vec![false; self.dim];
        for &c in &self.free_cols {
            bits[c] = rng.random();
        }
        for (i, row) in self.rows.iter().enumerate() {
            let pivot = self.pivot_cols[i];
            let mut v = self.rhs[i];
            for (w, &word) in row.iter().enumerate().take(self.words) {
                let mut m = word;
                while m != 0 {
                    let j = w * 64 + m.trailing_zeros() as usize;
                    m &= m - 1;
                    if j != pivot && bits[j] {
                        v = !v;
                    }
                }
            }
            bits[pivot] = v;
        }
        BitString::from_bits(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;

    fn satisfies(rows: &[Vec<usize>], rhs: &BitString, sol: &BitString) -> bool {
        rows.iter().enumerate().all(|(r, idx)| sol.parity_at(idx) == rhs.get(r))
    }

    #[test]
    fn solves_hand_system() {
        // x0 ^ x1 = 1, x1 ^ x2 = 0, x0 = 1  =>  x = (1, 0, 0, free)
        let rows = vec![vec![0, 1], vec![1, 2], vec![0]];
        let rhs = BitString::from_bits(vec![true, false, true]);
        let ech = Gf2Echelon::from_sparse(&rows, &rhs, 4).unwrap();
        assert_eq!(ech.rank(), 3);
        let mut rng = RngSeed::new(1, 0).rng();
        for _ in 0..16 {
            let sol = ech.sample_solution(&mut rng);
            assert!(sol.get(0) && !sol.get(1) && !sol.get(2));
            assert!(satisfies(&rows, &rhs, &sol));
        }
    }

    #[test]
    fn detects_inconsistency() {
        let rows = vec![vec![0, 1], vec![0, 1]];
        let rhs = BitString::from_bits(vec![false, true]);
        assert!(matches!(
            Gf2Echelon::from_sparse(&rows, &rhs, 3),
            Err(Error::InconsistentSystem)
        ));
    }

    #[test]
    fn redundant_consistent_rows_are_dropped() {
        let rows = vec![vec![0, 2], vec![0, 2]];
        let rhs = BitString::from_bits(vec![true, true]);
        let ech = Gf2Echelon::from_sparse(&rows, &rhs, 3).unwrap();
        assert_eq!(ech.rank(), 1);
    }

    #[test]
    fn sampled_solutions_cover_the_coset_uniformly() {
        // One constraint over 4 variables: 8 solutions.
        let rows = vec![vec![0, 1]];
        let rhs = BitString::from_bits(vec![true]);
        let ech = Gf2Echelon::from_sparse(&rows, &rhs, 4).unwrap();
        let mut counts = std::collections::HashMap::new();
        let mut rng = RngSeed::new(9, 0).rng();
        for _ in 0..4000 {
            let sol = ech.sample_solution(&mut rng);
            assert!(satisfies(&rows, &rhs, &sol));
            *counts.entry(sol.to_hex()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 8);
        for (_, c) in counts {
            // Expected 500 each; 5-sigma band.
            assert!(c > 390 && c < 610, "count {c}");
        }
    }

    #[test]
    fn random_sparse_systems_solve_across_sizes() {
        use rand::seq::index::sample as index_sample;
        let mut rng = RngSeed::new(33, 0).rng();
        for (d, t, w) in [(32usize, 8usize, 3usize), (128, 32, 3), (1024, 64, 5)] {
            let rows: Vec<Vec<usize>> =
                (0..t).map(|_| index_sample(&mut rng, d, w).into_vec()).collect();
            // Right-hand side built from a particular solution, so always consistent.
            let c0 = BitString::from_bits((0..d).map(|_| rng.random()).collect());
            let rhs = BitString::from_bits(rows.iter().map(|r| c0.parity_at(r)).collect());
            let ech = Gf2Echelon::from_sparse(&rows, &rhs, d).unwrap();
            for _ in 0..8 {
                let sol = ech.sample_solution(&mut rng);
                assert!(satisfies(&rows, &rhs, &sol));
            }
        }
    }
}
