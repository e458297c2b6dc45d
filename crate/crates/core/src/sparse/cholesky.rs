//! Up-looking sparse Cholesky `P A Pᵀ = L Lᵀ`.
//!
//! The symbolic pass (ordering, elimination tree, row reach sets and the
//! exact pattern of `L`) depends only on the nonzero pattern, so it is built
//! once and shared through an `Arc` by every numeric factorization.

use std::sync::Arc;

use super::{minimum_degree, SparsePattern, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    MinimumDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
pub struct NotPositiveDefinite {
    pub pivot: usize,
    pub value: f64,
}

#[derive(Debug)]
pub struct SymbolicCholesky {
    pattern: Arc<SparsePattern>,
    /// perm[new] = old
    perm: Vec<usize>,
    /// For each permuted column k: (value slot in A, permuted row) with row <= k.
    a_ptr: Vec<usize>,
    a_map: Vec<(usize, usize)>,
    /// Row reach sets of L in topological order (strictly below diagonal).
    reach_ptr: Vec<usize>,
    reach_idx: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
}

impl SymbolicCholesky {
    pub fn analyze(pattern: Arc<SparsePattern>, ordering: Ordering) -> Self {
        let n = pattern.dim();
        let perm = match ordering {
            Ordering::Natural => (0..n).collect(),
            Ordering::MinimumDegree => minimum_degree(&pattern),
        };
        let mut inv = vec![0; n];
        for (k, &old) in perm.iter().enumerate() {
            inv[old] = k;
        }

        let mut a_ptr = Vec::with_capacity(n + 1);
        let mut a_map = Vec::new();
        a_ptr.push(0);
        for k in 0..n {
            for p in pattern.col_range(perm[k]) {
                let r = inv[pattern.row_indices()[p]];
                if r <= k {
                    a_map.push((p, r));
                }
            }
            a_ptr.push(a_map.len());
        }

        // Elimination tree.
        const NONE: usize = usize::MAX;
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &(_, r) in &a_map[a_ptr[k]..a_ptr[k + 1]] {
                let mut i = r;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        // Row reach sets: pattern of row k of L.
        let mut mark = vec![NONE; n];
        let mut stack = Vec::new();
        let mut reach_ptr = vec![0];
        let mut reach_idx = Vec::new();
        let mut counts = vec![1usize; n];
        for k in 0..n {
            mark[k] = k;
            let top = reach_idx.len();
            for &(_, r) in &a_map[a_ptr[k]..a_ptr[k + 1]] {
                let mut i = r;
                stack.clear();
                while mark[i] != k {
                    stack.push(i);
                    mark[i] = k;
                    i = parent[i];
                }
                // Each path goes in front of the earlier ones, leaf first,
                // which keeps the row reach in topological order.
                reach_idx.splice(top..top, stack.iter().copied());
            }
            for &i in &reach_idx[top..] {
                counts[i] += 1;
            }
            reach_ptr.push(reach_idx.len());
        }

        let mut l_ptr = vec![0; n + 1];
        for j in 0..n {
            l_ptr[j + 1] = l_ptr[j] + counts[j];
        }
        let mut l_idx = vec![0; l_ptr[n]];
        let mut next: Vec<usize> = l_ptr[..n].to_vec();
        for k in 0..n {
            for &i in &reach_idx[reach_ptr[k]..reach_ptr[k + 1]] {
                l_idx[next[i]] = k;
                next[i] += 1;
            }
            l_idx[next[k]] = k;
            next[k] += 1;
        }

        Self { pattern, perm, a_ptr, a_map, reach_ptr, reach_idx, l_ptr, l_idx }
    }

    pub fn pattern(&self) -> &Arc<SparsePattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn l_nnz(&self) -> usize {
        self.l_idx.len()
    }

    /// Numeric factorization of `a` (whose pattern must be this one).
    pub fn factor(self: &Arc<Self>, a: &SymMatrix) -> Result<CholeskyFactor, NotPositiveDefinite> {
        self.factor_shifted(a, 0.0)
    }

    /// Factor `a + shift * I`.
    pub fn factor_shifted(
        self: &Arc<Self>,
        a: &SymMatrix,
        shift: f64,
    ) -> Result<CholeskyFactor, NotPositiveDefinite> {
        assert!(
            Arc::ptr_eq(a.pattern(), &self.pattern) || **a.pattern() == *self.pattern,
            "matrix pattern differs from the analyzed pattern"
        );
        let n = self.dim();
        let av = a.values();
        let mut lx = vec![0.0; self.l_idx.len()];
        let mut next: Vec<usize> = self.l_ptr[..n].to_vec();
        let mut x = vec![0.0; n];
        for k in 0..n {
            for &(p, r) in &self.a_map[self.a_ptr[k]..self.a_ptr[k + 1]] {
                x[r] = av[p];
            }
            let mut d = x[k] + shift;
            x[k] = 0.0;
            for &i in &self.reach_idx[self.reach_ptr[k]..self.reach_ptr[k + 1]] {
                let lki = x[i] / lx[self.l_ptr[i]];
                x[i] = 0.0;
                for p in self.l_ptr[i] + 1..next[i] {
                    x[self.l_idx[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                lx[next[i]] = lki;
                next[i] += 1;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(NotPositiveDefinite { pivot: self.perm[k], value: d });
            }
            lx[next[k]] = d.sqrt();
            next[k] += 1;
        }
        Ok(CholeskyFactor { symbolic: Arc::clone(self), lx })
    }

    /// Factor with the smallest diagonal shift from the doubling sequence
    /// `start, 2 start, 4 start, ...` that succeeds. Returns the shift used.
    pub fn factor_regularized(
        self: &Arc<Self>,
        a: &SymMatrix,
        start: f64,
    ) -> (CholeskyFactor, f64) {
        if let Ok(f) = self.factor(a) {
            return (f, 0.0);
        }
        let mut shift = start.max(f64::MIN_POSITIVE);
        loop {
            if let Ok(f) = self.factor_shifted(a, shift) {
                return (f, shift);
            }
            shift *= 2.0;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    symbolic: Arc<SymbolicCholesky>,
    lx: Vec<f64>,
}

impl CholeskyFactor {
    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    pub fn dim(&self) -> usize {
        self.symbolic.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let s = &self.symbolic;
        let n = s.dim();
        let mut y: Vec<f64> = s.perm.iter().map(|&o| b[o]).collect();
        for j in 0..n {
            let r = s.l_ptr[j]..s.l_ptr[j + 1];
            y[j] /= self.lx[r.start];
            let yj = y[j];
            if yj != 0.0 {
                for p in r.start + 1..r.end {
                    y[s.l_idx[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let r = s.l_ptr[j]..s.l_ptr[j + 1];
            let mut acc = y[j];
            for p in r.start + 1..r.end {
                acc -= self.lx[p] * y[s.l_idx[p]];
            }
            y[j] = acc / self.lx[r.start];
        }
        for (k, &o) in s.perm.iter().enumerate() {
            b[o] = y[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_spd(n: usize, density: f64, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        let mut rnd = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64)
        };
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..j {
                if rnd() < density {
                    let v = rnd() - 0.5;
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
        }
        for i in 0..n {
            let row: f64 = (0..n).map(|j| a[(i, j)].abs()).sum();
            a[(i, i)] = row + 0.1 + rnd();
        }
        a
    }

    #[test]
    fn factor_and_solve_match_dense() {
        for (seed, ordering) in [(1, Ordering::Natural), (2, Ordering::MinimumDegree), (3, Ordering::MinimumDegree)] {
            let dense = random_spd(40, 0.1, seed);
            let a = SymMatrix::from_dense(&dense, 0.0);
            let sym = Arc::new(SymbolicCholesky::analyze(Arc::clone(a.pattern()), ordering));
            let f = sym.factor(&a).unwrap();
            let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
            let x = f.solve(&b);
            let r = &dense * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
            assert!(r.norm() < 1e-12, "residual {}", r.norm());
        }
    }

    #[test]
    fn detects_indefinite_and_regularizes() {
        let dense = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let a = SymMatrix::from_dense(&dense, 0.0);
        let sym = Arc::new(SymbolicCholesky::analyze(Arc::clone(a.pattern()), Ordering::Natural));
        assert!(sym.factor(&a).is_err());
        let (_, shift) = sym.factor_regularized(&a, 1e-12);
        assert!(shift > 1.0 && shift < 2.0 + 1e-9, "shift {shift}");
    }
}
