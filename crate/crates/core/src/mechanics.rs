//! Quasi-static small-strain elasticity with chemical eigenstrain and a
//! volumetric-deviatoric energy split; only the tensile branch is degraded.
//!
//! Strains and stresses are stored as tensor components
//! `[rr, zz, tt, rz]` (`tt` is the hoop direction; in plane geometry it is
//! the out-of-plane direction and plane strain applies).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::assembly::{l2_project, scalar_pattern};
use crate::fem::element::{interpolate, Triangle, N_QP};
use crate::fem::solver::{nested_dissection, Cholesky};
use crate::fem::{CsrMatrix, DirichletSet, ScalarField, SolverOptions, SparsityPattern, VectorField};
use crate::fracture::degradation;
use crate::material::{MaterialPoint, Phases};
use crate::mesh::{radius, Geometry, Mesh};
use crate::real::{norm2, Real};

pub type Tensor4<T> = [T; 4];

/// Double-contraction weights for `[rr, zz, tt, rz]` (shear appears twice).
const CONTRACTION: [f64; 4] = [1.0, 1.0, 1.0, 2.0];

/// `omega (c - c0) / 3` on the diagonal.
pub fn chemical_strain<T: Real>(c: T, c0: T, omega: T) -> Tensor4<T> {
    let e = omega * (c - c0) / T::lit(3.0);
    [e, e, e, T::zero()]
}

fn trace<T: Real>(e: &Tensor4<T>) -> T {
    e[0] + e[1] + e[2]
}

fn deviator<T: Real>(e: &Tensor4<T>) -> Tensor4<T> {
    let m = trace(e) / T::lit(3.0);
    [e[0] - m, e[1] - m, e[2] - m, e[3]]
}

pub fn contract<T: Real>(a: &Tensor4<T>, b: &Tensor4<T>) -> T {
    (0..4).map(|k| T::lit(CONTRACTION[k]) * a[k] * b[k]).sum()
}

/// Tensile and compressive strain energy densities `(psi+, psi-)` of the
/// elastic strain `strain - eigen`.
pub fn split_energy<T: Real>(strain: &Tensor4<T>, eigen: &Tensor4<T>, mat: &MaterialPoint<T>) -> (T, T) {
    let e: Tensor4<T> = std::array::from_fn(|k| strain[k] - eigen[k]);
    let tr = trace(&e);
    let dev = deviator(&e);
    let k = mat.bulk_modulus();
    let half = T::lit(0.5);
    let (pos, neg) = if tr > T::zero() { (tr, T::zero()) } else { (T::zero(), tr) };
    (
        half * k * pos * pos + mat.shear_modulus() * contract(&dev, &dev),
        half * k * neg * neg,
    )
}

/// Degraded stress and its tangent `d sigma / d e` for elastic strain `e`.
pub fn degraded_stress<T: Real>(e: &Tensor4<T>, mat: &MaterialPoint<T>, g: T) -> (Tensor4<T>, [[T; 4]; 4]) {
    let tr = trace(e);
    let dev = deviator(e);
    let kv = if tr > T::zero() { g * mat.bulk_modulus() } else { mat.bulk_modulus() };
    let two_g = T::lit(2.0) * g * mat.shear_modulus();
    let mut sigma = [T::zero(); 4];
    for k in 0..3 {
        sigma[k] = kv * tr + two_g * dev[k];
    }
    sigma[3] = two_g * dev[3];
    let mut tangent = [[T::zero(); 4]; 4];
    let third = T::lit(1.0 / 3.0);
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { T::one() } else { T::zero() };
            tangent[i][j] = kv + two_g * (delta - third);
        }
    }
    tangent[3][3] = two_g;
    (sigma, tangent)
}

/// Strain-displacement rows for the six element dofs `(u_r, u_z)` per node.
fn b_matrix<T: Real>(tri: &Triangle<T>, shape: &[T; 3], r: T) -> [[T; 6]; 4] {
    let mut b = [[T::zero(); 6]; 4];
    let half = T::lit(0.5);
    for a in 0..3 {
        let (dr, dz) = (tri.grad[a][0], tri.grad[a][1]);
        b[0][2 * a] = dr;
        b[1][2 * a + 1] = dz;
        if tri.geometry == Geometry::Axisymmetric {
            b[2][2 * a] = shape[a] / r;
        }
        b[3][2 * a] = half * dz;
        b[3][2 * a + 1] = half * dr;
    }
    b
}

/// Per-quadrature-point stress results.
#[derive(Debug, Clone)]
pub struct StressState<T> {
    pub stress: Vec<[Tensor4<T>; N_QP]>,
    pub hydrostatic: Vec<[T; N_QP]>,
    pub psi_plus: Vec<[T; N_QP]>,
    pub psi_minus: Vec<[T; N_QP]>,
    /// Undegraded elastic energy `0.5 sigma0 : (eps - eps_Li)` for consistency checks.
    pub psi_total: Vec<[T; N_QP]>,
}

impl<T: Real> StressState<T> {
    pub fn zeros(n_elements: usize) -> Self {
        StressState {
            stress: vec![[[T::zero(); 4]; N_QP]; n_elements],
            hydrostatic: vec![[T::zero(); N_QP]; n_elements],
            psi_plus: vec![[T::zero(); N_QP]; n_elements],
            psi_minus: vec![[T::zero(); N_QP]; n_elements],
            psi_total: vec![[T::zero(); N_QP]; n_elements],
        }
    }

    pub fn max_abs_stress(&self) -> T {
        self.stress
            .iter()
            .flat_map(|e| e.iter())
            .flat_map(|s| s.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Fields entering the equilibrium problem.
pub struct MechanicsInput<'a, T> {
    pub phases: &'a Phases<T>,
    /// Concentration (concentration dof layout).
    pub c: &'a [T],
    /// Stress-free reference concentration (concentration dof layout).
    pub c0: &'a [T],
    /// Nodal phase field.
    pub phi: &'a [T],
    /// Residual stiffness `k` in `g = (1 - phi)^2 + k`.
    pub residual_stiffness: T,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport<T> {
    pub displacement: VectorField<T>,
    pub stress: StressState<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

/// Equilibrium solver owning the displacement sparsity pattern and the
/// symbolic Cholesky analysis for one mesh.
#[derive(Debug, Clone)]
pub struct MechanicsSolver<T> {
    pattern: Arc<SparsityPattern>,
    chol: Cholesky<T>,
    constraints: DirichletSet<T>,
    projection_pattern: Arc<SparsityPattern>,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> MechanicsSolver<T> {
    /// Symmetry constraints: `u_r = 0` on the axis, `u_z = 0` on the plane `z = 0`.
    pub fn new(mesh: &Mesh<T>) -> Result<Self> {
        let mut constraints = DirichletSet::new();
        for (n, t) in mesh.tags.iter().enumerate() {
            if t.axis {
                constraints.insert(2 * n, T::zero());
            }
            if t.plane {
                constraints.insert(2 * n + 1, T::zero());
            }
        }
        Self::with_constraints(mesh, constraints)
    }

    pub fn with_constraints(mesh: &Mesh<T>, constraints: DirichletSet<T>) -> Result<Self> {
        let has_r = constraints.values.keys().any(|d| d % 2 == 0);
        let has_z = constraints.values.keys().any(|d| d % 2 == 1);
        if mesh.geometry == Geometry::Axisymmetric && !has_z {
            return Err(Error::Geometry(
                "rigid body motion along z is unconstrained (missing symmetry plane)".into(),
            ));
        }
        if mesh.geometry == Geometry::Planar && !(has_r && has_z) {
            return Err(Error::Geometry("plane problem needs constraints in both directions".into()));
        }
        let blocks: Vec<[usize; 6]> = mesh
            .triangles
            .iter()
            .map(|t| [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1])
            .collect();
        let pattern = Arc::new(SparsityPattern::from_blocks(2 * mesh.n_nodes(), blocks.iter().map(|b| &b[..])));
        let coords: Vec<[T; 2]> = (0..2 * mesh.n_nodes()).map(|d| mesh.nodes[d / 2]).collect();
        let order = nested_dissection(&pattern, &coords);
        let chol = Cholesky::analyze(pattern.clone(), order);
        Ok(MechanicsSolver {
            pattern,
            chol,
            constraints,
            projection_pattern: scalar_pattern(mesh.n_conc_dofs, &mesh.conc_dofs),
            tol: T::lit(1e-9),
            max_iter: 30,
        })
    }

    /// Residual `R(u) = integral(B^T sigma)`, tangent, and per-point results.
    fn evaluate(
        &self,
        mesh: &Mesh<T>,
        input: &MechanicsInput<'_, T>,
        u: &[T],
        with_tangent: bool,
    ) -> (Vec<T>, Option<CsrMatrix<T>>, StressState<T>, T) {
        let n = u.len();
        let mut energy = T::zero();
        let mut res = vec![T::zero(); n];
        let mut k = with_tangent.then(|| CsrMatrix::zeros(self.pattern.clone()));
        let mut state = StressState::zeros(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let tri = mesh.element(e);
            let nodes = mesh.triangles[e];
            let cd = mesh.conc_dofs[e];
            let region = mesh.regions[e];
            let ue: [T; 6] = std::array::from_fn(|i| u[2 * nodes[i / 2] + i % 2]);
            let phi_e = nodes.map(|nd| input.phi[nd]);
            let c_e = cd.map(|d| input.c[d]);
            let c0_e = cd.map(|d| input.c0[d]);
            let mut fe = [T::zero(); 6];
            let mut ke = [[T::zero(); 6]; 6];
            for (q, qp) in tri.quad_points().iter().enumerate() {
                let mat = input.phases.at(region, radius(qp.x));
                let b = b_matrix(&tri, &qp.shape, qp.x[0]);
                let strain: Tensor4<T> = std::array::from_fn(|c| (0..6).map(|a| b[c][a] * ue[a]).sum());
                let eigen = chemical_strain(interpolate(&qp.shape, c_e), interpolate(&qp.shape, c0_e), mat.omega);
                let elastic: Tensor4<T> = std::array::from_fn(|c| strain[c] - eigen[c]);
                let g = degradation(interpolate(&qp.shape, phi_e), input.residual_stiffness);
                let (sigma, tangent) = degraded_stress(&elastic, &mat, g);
                let (pp, pm) = split_energy(&strain, &eigen, &mat);
                let (sigma0, _) = degraded_stress(&elastic, &mat, T::one());
                state.stress[e][q] = sigma;
                state.hydrostatic[e][q] = trace(&sigma) / T::lit(3.0);
                state.psi_plus[e][q] = pp;
                state.psi_minus[e][q] = pm;
                state.psi_total[e][q] = T::lit(0.5) * contract(&sigma0, &elastic);
                energy = energy + qp.weight * (g * pp + pm);
                for a in 0..6 {
                    let mut s = T::zero();
                    for c in 0..4 {
                        s = s + T::lit(CONTRACTION[c]) * b[c][a] * sigma[c];
                    }
                    fe[a] = fe[a] + qp.weight * s;
                }
                if with_tangent {
                    // db[c][b] = sum_d tangent[c][d] * B[d][b]
                    let mut db = [[T::zero(); 6]; 4];
                    for c in 0..4 {
                        for bb in 0..6 {
                            db[c][bb] = (0..4).map(|d| tangent[c][d] * b[d][bb]).sum();
                        }
                    }
                    for a in 0..6 {
                        for bb in a..6 {
                            let mut s = T::zero();
                            for c in 0..4 {
                                s = s + T::lit(CONTRACTION[c]) * b[c][a] * db[c][bb];
                            }
                            ke[a][bb] = ke[a][bb] + qp.weight * s;
                        }
                    }
                }
            }
            let g: [usize; 6] = std::array::from_fn(|i| 2 * nodes[i / 2] + i % 2);
            for a in 0..6 {
                res[g[a]] = res[g[a]] + fe[a];
            }
            if let Some(k) = k.as_mut() {
                for a in 0..6 {
                    for bb in a..6 {
                        k.add_sym(g[a], g[bb], ke[a][bb]);
                    }
                }
            }
        }
        (res, k, state, energy)
    }

    fn free_norm(&self, r: &[T]) -> T {
        r.iter()
            .enumerate()
            .filter(|(d, _)| !self.constraints.contains(*d))
            .map(|(_, &v)| v * v)
            .sum::<T>()
            .sqrt()
    }

    /// Total residual force on constrained dofs (reaction check).
    pub fn reaction_sum(&self, mesh: &Mesh<T>, input: &MechanicsInput<'_, T>, u: &[T]) -> (T, T) {
        let (r, _, _, _) = self.evaluate(mesh, input, u, false);
        let mut sum_r = T::zero();
        let mut sum_z = T::zero();
        for &d in self.constraints.values.keys() {
            if d % 2 == 0 {
                sum_r = sum_r + r[d];
            } else {
                sum_z = sum_z + r[d];
            }
        }
        (sum_r, sum_z)
    }

    /// Solves for the displacement; the sign pattern of the volumetric
    /// strain is iterated to consistency (semi-smooth Newton).
    pub fn solve_equilibrium(
        &mut self,
        mesh: &Mesh<T>,
        input: &MechanicsInput<'_, T>,
        guess: Option<&[T]>,
    ) -> Result<EquilibriumReport<T>> {
        let n = 2 * mesh.n_nodes();
        let zero = vec![T::zero(); n];
        let (r0, _, _, _) = self.evaluate(mesh, input, &zero, false);
        // scale of the eigenstrain load, including the reactions it induces
        let reference = norm2(&r0);
        let mut u = guess.map_or_else(|| zero.clone(), <[T]>::to_vec);
        for (&d, &v) in &self.constraints.values {
            u[d] = v;
        }
        if reference == T::zero() {
            let (_, _, stress, _) = self.evaluate(mesh, input, &zero, false);
            return Ok(EquilibriumReport {
                displacement: VectorField(zero),
                stress,
                iterations: 0,
                relative_residual: T::zero(),
            });
        }
        let mut zero_bc = DirichletSet::new();
        for &d in self.constraints.values.keys() {
            zero_bc.insert(d, T::zero());
        }
        let (mut r, mut k, mut stress, mut energy) = self.evaluate(mesh, input, &u, true);
        for it in 0..=self.max_iter {
            let rel = self.free_norm(&r) / reference;
            if !rel.is_finite() {
                return Err(Error::NonPhysical("non-finite mechanical residual".into()));
            }
            if rel <= self.tol || it == self.max_iter {
                if rel > self.tol {
                    if rel > T::lit(1e-6) {
                        return Err(Error::NoConvergence {
                            solver: "equilibrium",
                            iterations: it,
                            residual: rel.as_f64(),
                            tol: self.tol.as_f64(),
                        });
                    }
                    log::warn!("equilibrium stalled at relative residual {rel:.2e} after {it} iterations");
                }
                return Ok(EquilibriumReport {
                    displacement: VectorField(u),
                    stress,
                    iterations: it,
                    relative_residual: rel,
                });
            }
            let mut kt = k.take().expect("tangent requested");
            let mut rhs: Vec<T> = r.iter().map(|&v| -v).collect();
            kt.apply_dirichlet(&zero_bc, &mut rhs);
            self.chol.factor(&kt)?;
            let du = self.chol.solve(&rhs);
            // the energy is convex and C1, so an Armijo backtrack on it
            // guarantees descent when the sign pattern of tr(e) changes
            let slope: T = r.iter().zip(&du).map(|(&a, &b)| a * b).sum();
            let mut alpha = T::one();
            let mut accepted = None;
            for _ in 0..30 {
                let trial: Vec<T> = u.iter().zip(&du).map(|(&a, &b)| a + alpha * b).collect();
                let out = self.evaluate(mesh, input, &trial, true);
                if out.3 <= energy + T::lit(1e-4) * alpha * slope || self.free_norm(&out.0) <= self.tol * reference {
                    accepted = Some((trial, out));
                    break;
                }
                alpha = alpha * T::lit(0.5);
            }
            let Some((trial, out)) = accepted else {
                return Err(Error::NoConvergence {
                    solver: "equilibrium line search",
                    iterations: it,
                    residual: rel.as_f64(),
                    tol: self.tol.as_f64(),
                });
            };
            u = trial;
            (r, k, stress, energy) = out;
        }
        unreachable!()
    }

    /// L2-projected hydrostatic stress on the concentration layout, so the
    /// two sides of the interface keep their own values.
    pub fn nodal_hydrostatic_stress(
        &self,
        mesh: &Mesh<T>,
        stress: &StressState<T>,
        opts: &SolverOptions<T>,
        guess: Option<&[T]>,
    ) -> Result<ScalarField<T>> {
        nodal_hydrostatic_stress(mesh, stress, &self.projection_pattern, opts, guess)
    }
}

/// L2-projected nodal stress components `[rr, zz, tt, rz]` on the
/// concentration layout (discontinuous across the interface).
pub fn nodal_stress_components<T: Real>(
    mesh: &Mesh<T>,
    stress: &StressState<T>,
    opts: &SolverOptions<T>,
) -> Result<[ScalarField<T>; 4]> {
    let pattern = scalar_pattern(mesh.n_conc_dofs, &mesh.conc_dofs);
    let mut out: [ScalarField<T>; 4] = std::array::from_fn(|_| ScalarField::zeros(mesh.n_conc_dofs));
    for (k, field) in out.iter_mut().enumerate() {
        let values: Vec<[T; N_QP]> = stress.stress.iter().map(|e| std::array::from_fn(|q| e[q][k])).collect();
        *field = l2_project(mesh, &mesh.conc_dofs, &pattern, &values, opts, None)?;
    }
    Ok(out)
}

pub fn nodal_hydrostatic_stress<T: Real>(
    mesh: &Mesh<T>,
    stress: &StressState<T>,
    pattern: &Arc<SparsityPattern>,
    opts: &SolverOptions<T>,
    guess: Option<&[T]>,
) -> Result<ScalarField<T>> {
    if stress.hydrostatic.iter().all(|e| e.iter().all(|&v| v == T::zero())) {
        return Ok(ScalarField::zeros(mesh.n_conc_dofs));
    }
    l2_project(mesh, &mesh.conc_dofs, pattern, &stress.hydrostatic, opts, guess)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> MaterialPoint<f64> {
        crate::material::Material::<f64>::nmc811().props
    }

    #[test]
    fn chemical_strain_cases() {
        assert_eq!(chemical_strain(5.0, 5.0, 7.88e-7), [0.0; 4]);
        let e = chemical_strain(3e4_f64, 0.0, 7.88e-7);
        assert!((e[0] - 7.88e-3_f64).abs() < 1e-15 && e[3] == 0.0);
        assert!(chemical_strain(1.0, 2.0, 7.88e-7)[1] < 0.0);
    }

    #[test]
    fn split_of_pure_dilation_and_compression() {
        let m = mat();
        let k = m.bulk_modulus();
        let d = 1e-3;
        let (p, n) = split_energy(&[d, d, d, 0.0], &[0.0; 4], &m);
        assert!((p - 0.5 * k * (3.0 * d).powi(2)).abs() < 1e-9 * p && n == 0.0);
        let (p, n) = split_energy(&[-d, -d, -d, 0.0], &[0.0; 4], &m);
        assert!(p.abs() < 1e-9 && (n - 0.5 * k * (3.0 * d).powi(2)).abs() < 1e-9 * n);
    }

    #[test]
    fn split_of_pure_shear() {
        let m = mat();
        let s = 2e-3;
        let (p, n) = split_energy(&[0.0, 0.0, 0.0, s], &[0.0; 4], &m);
        assert!((p - 2.0 * m.shear_modulus() * s * s).abs() < 1e-9 * p);
        assert_eq!(n, 0.0);
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let m = mat();
        let e = [1e-3, -4e-4, 2e-4, 3e-4];
        let (_, tangent) = degraded_stress(&e, &m, 0.3);
        for j in 0..4 {
            let h = 1e-9;
            let mut ep = e;
            ep[j] += h;
            let mut em = e;
            em[j] -= h;
            let (sp, _) = degraded_stress(&ep, &m, 0.3);
            let (sm, _) = degraded_stress(&em, &m, 0.3);
            for i in 0..4 {
                let fd = (sp[i] - sm[i]) / (2.0 * h);
                assert!((fd - tangent[i][j]).abs() <= 1e-5 * tangent[0][0].abs(), "{i}{j}");
            }
        }
    }

    #[test]
    fn degrading_only_tensile_branch() {
        let m = mat();
        let e = [1e-3, 1e-3, 1e-3, 0.0];
        let (s0, _) = degraded_stress(&e, &m, 1.0);
        let (s1, _) = degraded_stress(&e, &m, 1e-6);
        assert!((s1[0] / s0[0] - 1e-6).abs() < 1e-12);
        let c = [-1e-3, -1e-3, -1e-3, 0.0];
        let (c0, _) = degraded_stress(&c, &m, 1.0);
        let (c1, _) = degraded_stress(&c, &m, 1e-6);
        assert_eq!(c0, c1);
    }
}
