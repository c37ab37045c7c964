//! Square sparse matrices in compressed-row form, just enough for the
//! discrete Laplacian pipeline: assembly from triplets, mat-vec, diagonal
//! access, and symmetric diagonal scaling.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Debug)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Assemble an `n x n` matrix from (row, col, value) triplets; duplicates
    /// are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; n];
        let mut entry_rows: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if entry_rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                entry_rows.push(r);
                col_idx.push(c);
                values.push(v);
                row_counts[r] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        SparseOperator {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Diagonal matrix from its entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseOperator {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row_entries(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row_entries(r)
            .find(|&(cc, _)| cc == c)
            .map_or(0.0, |(_, v)| v)
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[idx] * x[self.col_idx[idx]];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row_entries(r).map(|(_, v)| v).sum()
    }

    /// Max |A_ij - A_ji| over stored entries.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r)).abs());
        }
        worst
    }

    /// `D^{-1/2} A D^{-1/2}` for a positive diagonal `d`.
    pub fn scale_sym(&self, d: &[f64]) -> SparseOperator {
        debug_assert_eq!(d.len(), self.n);
        let inv_sqrt: Vec<f64> = d.iter().map(|&v| 1.0 / libm::sqrt(v)).collect();
        let mut out = self.clone();
        for r in 0..self.n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[idx] = self.values[idx] * inv_sqrt[r] * inv_sqrt[self.col_idx[idx]];
            }
        }
        out
    }

    /// Flip the sign of every entry.
    pub fn negated(&self) -> SparseOperator {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = -*v;
        }
        out
    }

    /// Dense copy, for small-problem eigensolves and tests.
    pub fn to_dense(&self) -> crate::mat::Mat {
        let mut m = crate::mat::Mat::zeros(self.n, self.n);
        for (r, c, v) in self.triplets() {
            *m.at_mut(r, c) += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_assembly_sums_duplicates() {
        let a = SparseOperator::from_triplets(
            3,
            vec![(0, 1, 1.0), (0, 1, 2.0), (2, 2, 5.0), (1, 0, -1.0)],
        );
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(2, 2), 5.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = SparseOperator::from_triplets(
            3,
            vec![(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 0, -1.0), (2, 2, 2.0)],
        );
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        a.matvec(&x, &mut y);
        assert_eq!(y, [-1.0, 6.0, 5.0]);
    }

    #[test]
    fn symmetric_scaling() {
        let a = SparseOperator::from_triplets(2, vec![(0, 1, 4.0), (1, 0, 4.0)]);
        let s = a.scale_sym(&[4.0, 16.0]);
        assert_eq!(s.get(0, 1), 4.0 / (2.0 * 4.0));
        assert_eq!(s.symmetry_error(), 0.0);
    }
}
