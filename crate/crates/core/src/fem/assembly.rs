//! Assembly of scalar screened-Poisson type operators and L2 projection.

use std::sync::Arc;

use super::element::{QuadPoint, N_QP};
use super::field::ScalarField;
use super::solver::{solve_spd, SolverOptions};
use super::sparse::{CsrMatrix, SparseSystem, SparsityPattern};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::real::Real;

pub fn scalar_pattern(n: usize, dofs: &[[usize; 3]]) -> Arc<SparsityPattern> {
    Arc::new(SparsityPattern::from_blocks(n, dofs.iter().map(|d| &d[..])))
}

/// Pointwise coefficients of `a u - div(b grad u) = f`.
#[derive(Debug, Clone, Copy)]
pub struct ScreenedCoefficients<T> {
    pub reaction: T,
    pub diffusion: T,
    pub source: T,
}

/// Assembles `integral(a u v + b grad u . grad v) = integral(f v)` over the mesh.
/// `coeff(e, q, point)` is evaluated at quadrature point `q` of element `e`.
/// With `lumped`, the reaction term is row-sum lumped.
pub fn assemble_screened<T: Real>(
    mesh: &Mesh<T>,
    dofs: &[[usize; 3]],
    pattern: &Arc<SparsityPattern>,
    lumped: bool,
    coeff: impl Fn(usize, usize, &QuadPoint<T>) -> ScreenedCoefficients<T>,
) -> SparseSystem<T> {
    let mut a = CsrMatrix::zeros(pattern.clone());
    let mut b = vec![T::zero(); pattern.n()];
    for e in 0..mesh.n_elements() {
        let tri = mesh.element(e);
        let g = dofs[e];
        let mut ke = [[T::zero(); 3]; 3];
        let mut fe = [T::zero(); 3];
        for (q, qp) in tri.quad_points().iter().enumerate().take(N_QP) {
            let c = coeff(e, q, qp);
            for i in 0..3 {
                fe[i] = fe[i] + qp.weight * c.source * qp.shape[i];
                for j in i..3 {
                    let grad = tri.grad[i][0] * tri.grad[j][0] + tri.grad[i][1] * tri.grad[j][1];
                    let mut v = qp.weight * c.diffusion * grad;
                    if lumped {
                        if i == j {
                            v = v + qp.weight * c.reaction * qp.shape[i];
                        }
                    } else {
                        v = v + qp.weight * c.reaction * qp.shape[i] * qp.shape[j];
                    }
                    ke[i][j] = ke[i][j] + v;
                }
            }
        }
        for i in 0..3 {
            b[g[i]] = b[g[i]] + fe[i];
            for j in i..3 {
                a.add_sym(g[i], g[j], ke[i][j]);
            }
        }
    }
    SparseSystem::new(a, b)
}

/// Lumped (row-sum) mass per dof: `integral(N_i dV)`.
pub fn lumped_mass<T: Real>(mesh: &Mesh<T>, dofs: &[[usize; 3]], n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n];
    for e in 0..mesh.n_elements() {
        for qp in mesh.element(e).quad_points() {
            for i in 0..3 {
                let d = dofs[e][i];
                m[d] = m[d] + qp.weight * qp.shape[i];
            }
        }
    }
    m
}

/// L2 projection of a quadrature-point quantity onto the nodal space given by `dofs`.
pub fn l2_project<T: Real>(
    mesh: &Mesh<T>,
    dofs: &[[usize; 3]],
    pattern: &Arc<SparsityPattern>,
    values: &[[T; N_QP]],
    opts: &SolverOptions<T>,
    guess: Option<&[T]>,
) -> Result<ScalarField<T>> {
    let system = assemble_screened(mesh, dofs, pattern, false, |e, q, _| ScreenedCoefficients {
        reaction: T::one(),
        diffusion: T::zero(),
        source: values[e][q],
    });
    let (x, _) = solve_spd(&system, opts, guess)?;
    Ok(ScalarField(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_particle_mesh, MeshResolution, ParticleSpec};

    fn mesh() -> Mesh<f64> {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let res = MeshResolution {
            bulk: 0.6e-6,
            interface_band: 0.2e-6,
            crack_band: 0.2e-6,
            interface_halfwidth: 0.2e-6,
            grading: 0.3,
        };
        build_particle_mesh(&spec, &res).unwrap()
    }

    fn opts() -> SolverOptions<f64> {
        SolverOptions {
            tol: 1e-13,
            ..Default::default()
        }
    }

    #[test]
    fn constant_projects_to_itself() {
        let m = mesh();
        let p = scalar_pattern(m.n_nodes(), &m.triangles);
        let vals = vec![[5.0; N_QP]; m.n_elements()];
        let f = l2_project(&m, &m.triangles, &p, &vals, &opts(), None).unwrap();
        assert!(f.iter().all(|v| (v - 5.0).abs() < 1e-9));
    }

    #[test]
    fn linear_field_reproduced_on_concentration_layout() {
        let m = mesh();
        let p = scalar_pattern(m.n_conc_dofs, &m.conc_dofs);
        let lin = |r: f64| 2.0 + 3.0e5 * r;
        let vals: Vec<[f64; N_QP]> = (0..m.n_elements())
            .map(|e| m.element(e).quad_points().map(|q| lin(q.x[0])))
            .collect();
        let f = l2_project(&m, &m.conc_dofs, &p, &vals, &opts(), None).unwrap();
        for (d, v) in f.iter().enumerate() {
            let exact = lin(m.nodes[m.conc_dof_node[d]][0]);
            assert!((v - exact).abs() <= 1e-8 * exact.abs(), "{v} vs {exact}");
        }
    }

    #[test]
    fn lumped_mass_sums_to_volume() {
        let m = mesh();
        let lm = lumped_mass(&m, &m.conc_dofs, m.n_conc_dofs);
        let total: f64 = lm.iter().sum();
        assert!((total - m.volume(None)).abs() < 1e-12 * total);
    }
}
