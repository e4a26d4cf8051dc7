use std::ops::{Deref, DerefMut};

use crate::real::Real;

/// Nodal scalar values. The owner decides which dof layout applies
/// (one value per node, or the concentration layout with duplicated
/// interface dofs).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T>(pub Vec<T>);

impl<T: Real> ScalarField<T> {
    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![T::zero(); n])
    }

    pub fn constant(n: usize, v: T) -> Self {
        ScalarField(vec![v; n])
    }

    pub fn min(&self) -> T {
        self.0.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn max(&self) -> T {
        self.0.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn gather(&self, dofs: [usize; 3]) -> [T; 3] {
        dofs.map(|d| self.0[d])
    }
}

impl<T> Deref for ScalarField<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for ScalarField<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

/// Nodal `(u_r, u_z)` pairs stored interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T>(pub Vec<T>);

impl<T: Real> VectorField<T> {
    pub fn zeros(n_nodes: usize) -> Self {
        VectorField(vec![T::zero(); 2 * n_nodes])
    }

    pub fn n_nodes(&self) -> usize {
        self.0.len() / 2
    }

    pub fn at(&self, node: usize) -> [T; 2] {
        [self.0[2 * node], self.0[2 * node + 1]]
    }
}

impl<T> Deref for VectorField<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}
