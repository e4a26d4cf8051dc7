//! Linear solvers: Jacobi-preconditioned CG and BiCGSTAB, and an up-looking
//! sparse Cholesky factorisation with nested-dissection ordering.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sparse::{CsrMatrix, SparseSystem, SparsityPattern};
use crate::error::{Error, Result};
use crate::real::{dot, norm2, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolverKind {
    #[default]
    Cg,
    Direct,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    pub kind: LinearSolverKind,
    /// Relative residual `||b - A x|| / ||b||`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            kind: LinearSolverKind::Cg,
            tol: T::lit(1e-10),
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn jacobi<T: Real>(a: &CsrMatrix<T>) -> Vec<T> {
    a.diagonal()
        .into_iter()
        .map(|d| if d.abs() > T::zero() { T::one() / d } else { T::one() })
        .collect()
}

fn relative_residual<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> T {
    let ax = a.apply(x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &yi)| bi - yi).collect();
    let bn = norm2(b);
    if bn > T::zero() {
        norm2(&r) / bn
    } else {
        norm2(&r)
    }
}

/// Preconditioned conjugate gradients; `x` holds the initial guess on entry.
pub fn cg<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &mut [T], tol: T, max_iter: usize) -> Result<SolveStats> {
    let n = a.n();
    let bn = norm2(b);
    if bn == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = jacobi(a);
    let mut r = vec![T::zero(); n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<T> = r.iter().zip(&m).map(|(&ri, &mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![T::zero(); n];
    for it in 0..=max_iter {
        let res = norm2(&r) / bn;
        if res <= tol {
            return Ok(SolveStats {
                iterations: it,
                relative_residual: res.as_f64(),
            });
        }
        if it == max_iter {
            return Err(Error::NoConvergence {
                solver: "conjugate gradient",
                iterations: it,
                residual: res.as_f64(),
                tol: tol.as_f64(),
            });
        }
        a.mul_vec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                pivot: it,
                value: pq.as_f64(),
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * q[i];
            z[i] = r[i] * m[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    unreachable!()
}

/// Jacobi-preconditioned BiCGSTAB for the mildly non-symmetric transport Jacobian.
pub fn bicgstab<T: Real>(a: &CsrMatrix<T>, b: &[T], x: &mut [T], tol: T, max_iter: usize) -> Result<SolveStats> {
    let n = a.n();
    let bn = norm2(b);
    if bn == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = jacobi(a);
    let mut r = vec![T::zero(); n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut restarts = 0;
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut zs = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut it = 0;
    loop {
        let res = norm2(&r) / bn;
        if res <= tol {
            // guard against drift of the recursive residual
            let true_res = relative_residual(a, x, b);
            if true_res <= tol * T::lit(10.0) || restarts > 3 {
                return Ok(SolveStats {
                    iterations: it,
                    relative_residual: true_res.as_f64(),
                });
            }
            restarts += 1;
            a.mul_vec(x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            r_hat.copy_from_slice(&r);
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            v.iter_mut().for_each(|e| *e = T::zero());
            p.iter_mut().for_each(|e| *e = T::zero());
            continue;
        }
        if it >= max_iter {
            return Err(Error::NoConvergence {
                solver: "BiCGSTAB",
                iterations: it,
                residual: res.as_f64(),
                tol: tol.as_f64(),
            });
        }
        it += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < T::min_positive_value().sqrt() {
            // breakdown: restart from the current iterate
            r_hat.copy_from_slice(&r);
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            v.iter_mut().for_each(|e| *e = T::zero());
            p.iter_mut().for_each(|e| *e = T::zero());
            restarts += 1;
            if restarts > 50 {
                return Err(Error::NoConvergence {
                    solver: "BiCGSTAB",
                    iterations: it,
                    residual: res.as_f64(),
                    tol: tol.as_f64(),
                });
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = m[i] * p[i];
        }
        a.mul_vec(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bn <= tol {
            for i in 0..n {
                x[i] = x[i] + alpha * y[i];
            }
            r.copy_from_slice(&s);
            continue;
        }
        for i in 0..n {
            zs[i] = m[i] * s[i];
        }
        a.mul_vec(&zs, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
        for i in 0..n {
            x[i] = x[i] + alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
    }
}

/// Fill-reducing ordering by recursive coordinate bisection. `coords[d]` is
/// the position carried by dof `d`; separators are taken from the graph of
/// the pattern so the result is a true nested dissection.
pub fn nested_dissection<T: Real>(pattern: &SparsityPattern, coords: &[[T; 2]]) -> Vec<usize> {
    let n = pattern.n();
    let mut order = Vec::with_capacity(n);
    let mut label = vec![0u32; n];
    let mut next_label = 1u32;
    let mut dofs: Vec<usize> = (0..n).collect();
    dissect(&mut dofs, pattern, coords, &mut label, &mut next_label, &mut order);
    order
}

fn dissect<T: Real>(
    dofs: &mut [usize],
    pattern: &SparsityPattern,
    coords: &[[T; 2]],
    label: &mut [u32],
    next_label: &mut u32,
    order: &mut Vec<usize>,
) {
    const LEAF: usize = 48;
    if dofs.len() <= LEAF {
        order.extend_from_slice(dofs);
        return;
    }
    let (mut lo, mut hi) = ([T::max_value(); 2], [T::min_value(); 2]);
    for &d in dofs.iter() {
        for k in 0..2 {
            lo[k] = lo[k].min(coords[d][k]);
            hi[k] = hi[k].max(coords[d][k]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    dofs.sort_unstable_by(|&a, &b| {
        coords[a][axis]
            .partial_cmp(&coords[b][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mid = dofs.len() / 2;
    let right_label = *next_label;
    *next_label += 1;
    for &d in &dofs[mid..] {
        label[d] = right_label;
    }
    let (left, right) = dofs.split_at_mut(mid);
    let mut interior: Vec<usize> = Vec::with_capacity(left.len());
    let mut separator: Vec<usize> = Vec::new();
    for &d in left.iter() {
        if pattern.row(d).iter().any(|&j| label[j] == right_label) {
            separator.push(d);
        } else {
            interior.push(d);
        }
    }
    let mut right = right.to_vec();
    dissect(&mut interior, pattern, coords, label, next_label, order);
    dissect(&mut right, pattern, coords, label, next_label, order);
    order.extend_from_slice(&separator);
}

const NONE: usize = usize::MAX;

/// Sparse Cholesky factor `P A P^T = L L^T`. The symbolic analysis is
/// reused across numeric factorisations of matrices with the same pattern.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    pattern: Arc<SparsityPattern>,
    perm: Vec<usize>,
    /// Upper part of the permuted matrix by column: row index and source slot.
    c_ptr: Vec<usize>,
    c_row: Vec<usize>,
    c_src: Vec<usize>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<T>,
    factored: bool,
}

impl<T: Real> Cholesky<T> {
    /// Symbolic analysis for `pattern` under the ordering `perm` (new -> old).
    pub fn analyze(pattern: Arc<SparsityPattern>, perm: Vec<usize>) -> Self {
        let n = pattern.n();
        assert_eq!(perm.len(), n, "ordering must be a permutation of the dofs");
        let mut inv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        debug_assert!(inv.iter().all(|&i| i != NONE));
        let mut cols: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for old_i in 0..n {
            let range = pattern.row_range(old_i);
            for (slot, &old_j) in range.clone().zip(pattern.row(old_i)) {
                let (i, j) = (inv[old_i], inv[old_j]);
                if i <= j {
                    cols[j].push((i, slot));
                }
            }
        }
        let mut c_ptr = Vec::with_capacity(n + 1);
        let mut c_row = Vec::new();
        let mut c_src = Vec::new();
        c_ptr.push(0);
        for col in &mut cols {
            col.sort_unstable();
            for &(i, s) in col.iter() {
                c_row.push(i);
                c_src.push(s);
            }
            c_ptr.push(c_row.len());
        }

        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &row in &c_row[c_ptr[k]..c_ptr[k + 1]] {
                let mut i = row;
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

        let mut chol = Cholesky {
            pattern,
            perm,
            c_ptr,
            c_row,
            c_src,
            parent,
            l_ptr: Vec::new(),
            l_idx: Vec::new(),
            l_val: Vec::new(),
            factored: false,
        };
        let mut counts = vec![1usize; n];
        let mut stack = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            let top = chol.ereach(k, &mut stack, &mut flag);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut l_ptr = Vec::with_capacity(n + 1);
        l_ptr.push(0);
        for c in counts {
            l_ptr.push(l_ptr.last().unwrap() + c);
        }
        let nnz = *l_ptr.last().unwrap();
        chol.l_ptr = l_ptr;
        chol.l_idx = vec![0; nnz];
        chol.l_val = vec![T::zero(); nnz];
        chol
    }

    /// Nonzero pattern of row `k` of `L` in topological order, in `stack[top..]`.
    fn ereach(&self, k: usize, stack: &mut [usize], flag: &mut [usize]) -> usize {
        let n = stack.len();
        let mut top = n;
        flag[k] = k;
        for &row in &self.c_row[self.c_ptr[k]..self.c_ptr[k + 1]] {
            let mut i = row;
            if i > k {
                continue;
            }
            let mut len = 0;
            while flag[i] != k {
                stack[len] = i;
                len += 1;
                flag[i] = k;
                i = self.parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                stack[top] = stack[len];
            }
        }
        top
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len()
    }

    pub fn factor(&mut self, a: &CsrMatrix<T>) -> Result<()> {
        assert!(Arc::ptr_eq(a.pattern(), &self.pattern) || **a.pattern() == *self.pattern);
        let n = self.pattern.n();
        let values = a.values();
        let mut x = vec![T::zero(); n];
        let mut next: Vec<usize> = self.l_ptr[..n].to_vec();
        let mut stack = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            let top = self.ereach(k, &mut stack, &mut flag);
            x[k] = T::zero();
            for p in self.c_ptr[k]..self.c_ptr[k + 1] {
                x[self.c_row[p]] = values[self.c_src[p]];
            }
            let mut d = x[k];
            x[k] = T::zero();
            for &i in &stack[top..] {
                let lki = x[i] / self.l_val[self.l_ptr[i]];
                x[i] = T::zero();
                for p in self.l_ptr[i] + 1..next[i] {
                    let r = self.l_idx[p];
                    x[r] = x[r] - self.l_val[p] * lki;
                }
                d = d - lki * lki;
                let p = next[i];
                next[i] += 1;
                self.l_idx[p] = k;
                self.l_val[p] = lki;
            }
            if !(d > T::zero()) {
                self.factored = false;
                return Err(Error::NotPositiveDefinite {
                    pivot: self.perm[k],
                    value: d.as_f64(),
                });
            }
            let p = next[k];
            next[k] += 1;
            self.l_idx[p] = k;
            self.l_val[p] = d.sqrt();
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert!(self.factored, "solve called before a successful factorisation");
        let n = b.len();
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let range = self.l_ptr[j]..self.l_ptr[j + 1];
            y[j] = y[j] / self.l_val[range.start];
            let yj = y[j];
            for p in range.start + 1..range.end {
                let i = self.l_idx[p];
                y[i] = y[i] - self.l_val[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let range = self.l_ptr[j]..self.l_ptr[j + 1];
            let mut s = y[j];
            for p in range.start + 1..range.end {
                s = s - self.l_val[p] * y[self.l_idx[p]];
            }
            y[j] = s / self.l_val[range.start];
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Solves a constrained SPD system to the requested relative residual.
pub fn solve_spd<T: Real>(system: &SparseSystem<T>, opts: &SolverOptions<T>, guess: Option<&[T]>) -> Result<(Vec<T>, SolveStats)> {
    let (a, b) = system.constrained();
    let n = a.n();
    match opts.kind {
        LinearSolverKind::Cg => {
            let mut x = guess.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
            for (&d, &v) in &system.constraints.values {
                x[d] = v;
            }
            let stats = cg(&a, &b, &mut x, opts.tol, opts.max_iter)?;
            Ok((x, stats))
        }
        LinearSolverKind::Direct => {
            let perm: Vec<usize> = (0..n).collect();
            let mut chol = Cholesky::analyze(a.pattern().clone(), perm);
            chol.factor(&a)?;
            let x = chol.solve(&b);
            let res = relative_residual(&a, &x, &b);
            Ok((
                x,
                SolveStats {
                    iterations: 1,
                    relative_residual: res.as_f64(),
                },
            ))
        }
    }
}
