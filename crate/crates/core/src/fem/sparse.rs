//! Compressed sparse row storage with a shared, immutable sparsity pattern.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern of the union of dense element blocks.
    pub fn from_blocks<'a>(n: usize, blocks: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for block in blocks {
            for &i in block {
                rows[i].extend_from_slice(block);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(i);
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern { n, row_ptr, col_idx }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    pattern: Arc<SparsityPattern>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![T::zero(); pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let blocks: Vec<[usize; 1]> = (0..n).map(|i| [i]).collect();
        let pattern = Arc::new(SparsityPattern::from_blocks(n, blocks.iter().map(|b| &b[..])));
        let mut m = CsrMatrix::zeros(pattern);
        for i in 0..n {
            m.add(i, i, T::one());
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn fill_zero(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    /// Adds `v` at `(i, j)`. Panics if the entry is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .pattern
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] = self.values[k] + v;
    }

    /// Adds `v` at `(i, j)` and `(j, i)`; used with upper-triangle element loops.
    pub fn add_sym(&mut self, i: usize, j: usize, v: T) {
        self.add(i, j, v);
        if i != j {
            self.add(j, i, v);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.find(i, j).map_or(T::zero(), |k| self.values[k])
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.pattern.row_range(i) {
                s = s + self.values[k] * x[self.pattern.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n()];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n() {
            for k in self.pattern.row_range(i) {
                let j = self.pattern.col_idx[k];
                m = m.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        m
    }

    /// Symmetric elimination of prescribed dofs: the constrained rows and
    /// columns are replaced by the identity and `rhs` is corrected.
    pub fn apply_dirichlet(&mut self, constraints: &DirichletSet<T>, rhs: &mut [T]) {
        if constraints.is_empty() {
            return;
        }
        let n = self.n();
        let mut fixed: Vec<Option<T>> = vec![None; n];
        for (&d, &v) in &constraints.values {
            fixed[d] = Some(v);
        }
        for i in 0..n {
            for k in self.pattern.row_range(i) {
                let j = self.pattern.col_idx[k];
                if let Some(g) = fixed[j] {
                    if fixed[i].is_none() {
                        rhs[i] = rhs[i] - self.values[k] * g;
                    }
                    self.values[k] = T::zero();
                } else if fixed[i].is_some() {
                    self.values[k] = T::zero();
                }
            }
        }
        // Constraint rows take the mean free diagonal so that they neither
        // dominate nor vanish from residual norms (entries scale with the
        // element measure and can be ~1e-14).
        let (mut sum, mut count) = (T::zero(), 0usize);
        for i in (0..n).filter(|&i| fixed[i].is_none()) {
            if let Some(k) = self.pattern.find(i, i) {
                sum = sum + self.values[k].abs();
                count += 1;
            }
        }
        let scale = if count > 0 && sum > T::zero() {
            sum / T::from_usize_lossy(count)
        } else {
            T::one()
        };
        for (&d, &v) in &constraints.values {
            let k = self.pattern.find(d, d).expect("diagonal in pattern");
            self.values[k] = scale;
            rhs[d] = scale * v;
        }
    }
}

/// Prescribed values keyed by dof.
#[derive(Debug, Clone, Default)]
pub struct DirichletSet<T> {
    pub values: BTreeMap<usize, T>,
}

impl<T: Real> DirichletSet<T> {
    pub fn new() -> Self {
        DirichletSet {
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, dof: usize, value: T) {
        self.values.insert(dof, value);
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, dof: usize) -> bool {
        self.values.contains_key(&dof)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
}

/// Assembled linear system `A x = b` with prescribed dofs.
#[derive(Debug, Clone)]
pub struct SparseSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    pub constraints: DirichletSet<T>,
}

impl<T: Real> SparseSystem<T> {
    pub fn new(matrix: CsrMatrix<T>, rhs: Vec<T>) -> Self {
        SparseSystem {
            matrix,
            rhs,
            constraints: DirichletSet::new(),
        }
    }

    /// Matrix and right-hand side after symmetric constraint elimination.
    pub fn constrained(&self) -> (CsrMatrix<T>, Vec<T>) {
        let mut a = self.matrix.clone();
        let mut b = self.rhs.clone();
        a.apply_dirichlet(&self.constraints, &mut b);
        (a, b)
    }
}
