//! Sparse symmetric matrices with a fixed, shareable nonzero pattern and a
//! Cholesky factorization whose symbolic analysis is computed once per
//! pattern and reused for every numeric refactorization.

mod cholesky;
mod ordering;

use std::sync::Arc;

pub use cholesky::{CholeskyFactor, NotPositiveDefinite, Ordering, SymbolicCholesky};
pub use ordering::minimum_degree;

/// Full (both triangles) compressed-column pattern of a symmetric matrix.
/// Row indices within each column are sorted and unique.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsePattern {
    /// Build the symmetric closure of the given coordinates. Diagonal
    /// entries are always present.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for (i, j) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) outside {n}x{n}");
            cols[j].push(i);
            cols[i].push(j);
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut c in cols {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(&c);
            col_ptr.push(row_idx.len());
        }
        Self { n, col_ptr, row_idx }
    }

    /// Pattern of a union of dense element blocks, each given by its DoF list.
    pub fn from_elements<'a>(n: usize, elements: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut entries = Vec::new();
        for dofs in elements {
            for &i in dofs {
                for &j in dofs {
                    if i < j {
                        entries.push((i, j));
                    }
                }
            }
        }
        Self::from_entries(n, entries)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn column(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.col_ptr[j]..self.col_ptr[j + 1]
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    /// Position of entry (i, j) in the value array.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.col_range(j);
        self.row_idx[r.clone()].binary_search(&i).ok().map(|k| r.start + k)
    }

    /// Principal submatrix pattern on `keep` (sorted, unique), with the map
    /// from each new value slot to the slot it copies in `self`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> (SparsePattern, Vec<usize>) {
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut map = Vec::new();
        for &j in keep {
            for p in self.col_range(j) {
                let ni = new_index[self.row_idx[p]];
                if ni != usize::MAX {
                    row_idx.push(ni);
                    map.push(p);
                }
            }
            col_ptr.push(row_idx.len());
        }
        (SparsePattern { n: keep.len(), col_ptr, row_idx }, map)
    }
}

/// Symmetric matrix over a shared pattern.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    pattern: Arc<SparsePattern>,
    values: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(pattern: Arc<SparsePattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_dense(a: &nalgebra::DMatrix<f64>, drop_below: f64) -> Self {
        let n = a.nrows();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..j {
                if a[(i, j)].abs() > drop_below || a[(j, i)].abs() > drop_below {
                    entries.push((i, j));
                }
            }
        }
        let pattern = Arc::new(SparsePattern::from_entries(n, entries));
        let mut m = Self::zeros(pattern);
        for j in 0..n {
            for p in m.pattern.col_range(j) {
                let i = m.pattern.row_idx[p];
                m.values[p] = a[(i, j)];
            }
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsePattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn set_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Add `v` at (i, j) and, off the diagonal, at (j, i).
    ///
    /// Panics when the entry is outside the pattern.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pattern.find(i, j).expect("entry outside sparsity pattern");
        self.values[p] += v;
        if i != j {
            let q = self.pattern.find(j, i).expect("entry outside sparsity pattern");
            self.values[q] += v;
        }
    }

    /// Add `v` at (i, j) only.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pattern.find(i, j).expect("entry outside sparsity pattern");
        self.values[p] += v;
    }

    pub fn add_diagonal(&mut self, i: usize, v: f64) {
        self.add(i, i, v);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `self += s * other`; patterns must be identical.
    pub fn axpy(&mut self, s: f64, other: &SymMatrix) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for j in 0..self.dim() {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.pattern.col_range(j) {
                y[self.pattern.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    /// `|A| |x|`, entrywise absolute values.
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        for (j, xj) in x.iter().enumerate() {
            for p in self.pattern.col_range(j) {
                y[self.pattern.row_idx[p]] += (self.values[p] * xj).abs();
            }
        }
        y
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            for p in self.pattern.col_range(j) {
                let i = self.pattern.row_idx[p];
                worst = worst.max((self.values[p] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            for p in self.pattern.col_range(j) {
                a[(self.pattern.row_idx[p], j)] = self.values[p];
            }
        }
        a
    }

    /// Copy out a principal submatrix using a map produced by
    /// [`SparsePattern::principal_submatrix`].
    pub fn extract(&self, pattern: &Arc<SparsePattern>, map: &[usize]) -> SymMatrix {
        SymMatrix {
            pattern: Arc::clone(pattern),
            values: map.iter().map(|&p| self.values[p]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_is_symmetric_closure() {
        let p = SparsePattern::from_entries(4, [(0, 2), (3, 1), (0, 2)]);
        assert_eq!(p.column(0), &[0, 2]);
        assert_eq!(p.column(1), &[1, 3]);
        assert_eq!(p.column(2), &[0, 2]);
        assert_eq!(p.nnz(), 8);
        assert_eq!(p.find(2, 0), Some(1));
        assert_eq!(p.find(1, 0), None);
    }

    #[test]
    fn submatrix_extraction() {
        let p = Arc::new(SparsePattern::from_entries(4, [(0, 1), (1, 2), (2, 3)]));
        let mut m = SymMatrix::zeros(Arc::clone(&p));
        for i in 0..4 {
            m.add_diagonal(i, 2.0 + i as f64);
        }
        m.add_sym(0, 1, -1.0);
        m.add_sym(2, 3, -0.5);
        let (sp, map) = p.principal_submatrix(&[0, 2, 3]);
        let s = m.extract(&Arc::new(sp), &map);
        let d = s.to_dense();
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(1, 2)], -0.5);
        assert_eq!(d[(0, 1)], 0.0);
    }
}
