//! Newton iteration for residuals with assembled sparse Jacobians.

use super::solver::bicgstab;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::real::{norm2, Real};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    /// Relative residual target `||R|| <= tol * ||R_0||`.
    pub tol: T,
    /// Absolute residual below which the iteration stops regardless.
    pub abs_tol: T,
    pub max_iter: usize,
    pub linear_tol: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        NewtonOptions {
            tol: T::lit(1e-9),
            abs_tol: T::zero(),
            max_iter: 25,
            linear_tol: T::lit(1e-12),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Solves `R(x) = 0`. The callback returns the residual and its Jacobian at `x`.
pub fn newton_solve<T: Real, F>(mut eval: F, x0: Vec<T>, opts: &NewtonOptions<T>) -> Result<NewtonReport<T>>
where
    F: FnMut(&[T]) -> Result<(Vec<T>, CsrMatrix<T>)>,
{
    let mut x = x0;
    let (mut r, mut jac) = eval(&x)?;
    let r0 = norm2(&r);
    let target = (opts.tol * r0).max(opts.abs_tol);
    let mut rn = r0;
    for it in 0..=opts.max_iter {
        if !rn.is_finite() {
            return Err(Error::NonPhysical("non-finite Newton residual".into()));
        }
        if rn <= target {
            return Ok(NewtonReport {
                x,
                iterations: it,
                residual: rn,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let rhs: Vec<T> = r.iter().map(|&v| -v).collect();
        let mut dx = vec![T::zero(); x.len()];
        bicgstab(&jac, &rhs, &mut dx, opts.linear_tol, 10 * x.len() + 100)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi = *xi + *d;
        }
        (r, jac) = eval(&x)?;
        rn = norm2(&r);
    }
    Err(Error::NoConvergence {
        solver: "Newton",
        iterations: opts.max_iter,
        residual: if r0 > T::zero() { (rn / r0).as_f64() } else { rn.as_f64() },
        tol: opts.tol.as_f64(),
    })
}
