//! Stress-coupled lithium transport with damage-degraded diffusivity and the
//! OCP-mediated concentration jump across the core-shell interface.
//!
//! Flux `J = -D grad c + (c D Omega / RT) grad sigma_h` with `D = D0 g(phi)`,
//! integrated with implicit Euler and a row-sum lumped mass. The core-side
//! interface dofs are eliminated: each is slaved to its shell twin through the
//! equal-potential condition, and the two rows are summed so that the flux
//! leaving the shell enters the core.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::{lumped_mass, scalar_pattern};
use crate::fem::element::interpolate;
use crate::fem::solver::bicgstab;
use crate::fem::{CsrMatrix, SparsityPattern};
use crate::fracture::degradation;
use crate::material::{Phases, PhysicalConstants};
use crate::mesh::{radius, Geometry, Grading, Mesh, ParticleSpec, Region};
use crate::ocp::OcpCurve;
use crate::real::{norm2, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Cc,
    Cv,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Cc => "CC",
            Stage::Cv => "CV",
        })
    }
}

/// Outer-surface condition for one transport step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportBC<T> {
    pub stage: Stage,
    /// Inward surface flux during CC (mol m^-2 s^-1).
    pub j0: T,
    /// Surface stoichiometry held during CV.
    pub x_cv: T,
    pub cutoff_fraction: T,
}

impl<T: Real> TransportBC<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_cv > T::zero() && self.x_cv <= T::one()) {
            return Err(Error::Parameter(format!("x_cv must lie in (0, 1], got {}", self.x_cv)));
        }
        if !(self.cutoff_fraction > T::zero() && self.cutoff_fraction < T::one()) {
            return Err(Error::Parameter("cutoff fraction must lie in (0, 1)".into()));
        }
        if !self.j0.is_finite() {
            return Err(Error::Parameter("surface flux must be finite".into()));
        }
        Ok(())
    }
}

/// Lithium capacity `integral(c_max dV)` of the core and the shell of the full sphere.
pub fn sphere_capacities<T: Real>(spec: &ParticleSpec<T>, phases: &Phases<T>) -> (T, T) {
    let (v1, v2) = spec.sphere_volumes();
    let core = v1 * phases.core.props.c_max;
    let shell = match phases.grading {
        Grading::UniformShell => v2 * phases.shell.props.c_max,
        Grading::LinearGradedShell => {
            // c_max(r) r^2 is cubic in r, so Simpson's rule is exact
            let (a, b) = (spec.core_radius, spec.outer_radius());
            let f = |r: T| phases.at(Region::Shell, r).c_max * r * r;
            let m = (a + b) / T::lit(2.0);
            T::lit(4.0) * T::PI() * (b - a) / T::lit(6.0) * (f(a) + T::lit(4.0) * f(m) + f(b))
        }
    };
    (core, shell)
}

/// CC surface flux `(V1 c_max,1 + V2 c_max,2) / area * C / 3600`.
pub fn cc_flux<T: Real>(spec: &ParticleSpec<T>, phases: &Phases<T>, c_rate: T) -> T {
    let (q1, q2) = sphere_capacities(spec, phases);
    (q1 + q2) / spec.sphere_surface_area() * c_rate / T::lit(3600.0)
}

/// Material data on both sides of the interface.
#[derive(Debug, Clone)]
pub struct InterfaceSides<T> {
    pub core_ocp: Arc<OcpCurve<T>>,
    pub core_c_max: T,
    pub core_omega: T,
    pub shell_ocp: Arc<OcpCurve<T>>,
    pub shell_c_max: T,
    pub shell_omega: T,
    pub faraday: T,
}

impl<T: Real> InterfaceSides<T> {
    pub fn from_phases(phases: &Phases<T>, constants: &PhysicalConstants<T>) -> Self {
        let shell_ocp = match phases.grading {
            Grading::UniformShell => phases.shell.ocp.clone(),
            Grading::LinearGradedShell => phases.core.ocp.clone(),
        };
        let shell = phases.at(Region::Shell, phases.core_radius);
        InterfaceSides {
            core_ocp: phases.core.ocp.clone(),
            core_c_max: phases.core.props.c_max,
            core_omega: phases.core.props.omega,
            shell_ocp,
            shell_c_max: shell.c_max,
            shell_omega: shell.omega,
            faraday: constants.faraday,
        }
    }
}

/// Core-side concentration and its sensitivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceValue<T> {
    pub c_core: T,
    pub dc_dshell: T,
    pub dc_dsigma_shell: T,
    pub dc_dsigma_core: T,
    /// The target potential fell outside the core OCP table.
    pub clamped: bool,
}

/// Width (in stoichiometry) of the smooth saturation near the ends of the
/// core OCP table.
pub const SATURATION_WIDTH: f64 = 5e-3;

/// Maps an unbounded stoichiometry onto `(lo, hi)` with a C1 exponential
/// approach; identity at least `SATURATION_WIDTH` away from either end.
fn saturate<T: Real>(y: T, lo: T, hi: T) -> (T, T) {
    let d = T::lit(SATURATION_WIDTH);
    if y > hi - d {
        let e = (-(y - (hi - d)) / d).exp();
        (hi - d * e, e)
    } else if y < lo + d {
        let e = ((y - (lo + d)) / d).exp();
        (lo + d * e, e)
    } else {
        (y, T::one())
    }
}

/// `c1 = c_max,1 U1^-1((Omega2 sigma_h2 - Omega1 sigma_h1)/F + U2(c2 / c_max,2))`,
/// saturating smoothly at the ends of the core table so the core never
/// leaves it and Newton sees a strictly monotone map.
pub fn interface_constraint<T: Real>(
    c_shell: T,
    sigma_core: T,
    sigma_shell: T,
    sides: &InterfaceSides<T>,
) -> InterfaceValue<T> {
    let x2 = c_shell / sides.shell_c_max;
    let target = (sides.shell_omega * sigma_shell - sides.core_omega * sigma_core) / sides.faraday
        + sides.shell_ocp.eval(x2);
    let inv = sides.core_ocp.inverse_extended(target);
    let (lo, hi) = sides.core_ocp.domain();
    let (x1, dsat) = saturate(inv.x, lo, hi);
    let k = sides.core_c_max * inv.dx_du * dsat;
    InterfaceValue {
        c_core: sides.core_c_max * x1,
        dc_dshell: k * sides.shell_ocp.slope(x2) / sides.shell_c_max,
        dc_dsigma_shell: k * sides.shell_omega / sides.faraday,
        dc_dsigma_core: -k * sides.core_omega / sides.faraday,
        clamped: inv.clamped,
    }
}

/// Fields entering one transport step.
pub struct TransportInput<'a, T> {
    pub phases: &'a Phases<T>,
    pub constants: &'a PhysicalConstants<T>,
    /// Concentration at the start of the step (concentration dof layout).
    pub c_old: &'a [T],
    /// Nodal hydrostatic stress (concentration dof layout).
    pub sigma_h: &'a [T],
    /// Nodal phase field.
    pub phi: &'a [T],
    pub residual_stiffness: T,
    /// Apply `D = D0 g(phi)`; disabled only for comparison runs.
    pub degrade_diffusivity: bool,
    pub bc: TransportBC<T>,
}

#[derive(Debug, Clone)]
pub struct TransportReport<T> {
    pub c: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
    /// Lithium entering through the outer surface (mol/s, mesh measure).
    pub surface_inflow: T,
    /// Area-weighted mean inward normal flux (mol m^-2 s^-1).
    pub mean_surface_flux: T,
    pub clamped_pairs: usize,
}

/// Transport discretisation for one mesh.
#[derive(Debug, Clone)]
pub struct TransportSolver<T> {
    pattern: Arc<SparsityPattern>,
    mass: Vec<T>,
    /// Surface dofs and their load weights `integral(N_i dA)`.
    surface: Vec<(usize, T)>,
    surface_area: T,
    /// `(core dof, shell dof)` per interface node.
    pairs: Vec<(usize, usize)>,
    /// Representative (row) dof: core interface dofs map to their shell twin.
    rep: Vec<usize>,
    slave: Vec<Option<usize>>,
    sides: InterfaceSides<T>,
    surface_c_max: T,
    pub tol: T,
    pub linear_tol: T,
    pub max_iter: usize,
}

impl<T: Real> TransportSolver<T> {
    pub fn new(mesh: &Mesh<T>, phases: &Phases<T>, constants: &PhysicalConstants<T>) -> Self {
        let n = mesh.n_conc_dofs;
        let pairs: Vec<(usize, usize)> = mesh.interface_pairs.iter().map(|p| (p.core_dof, p.shell_dof)).collect();
        let mut rep: Vec<usize> = (0..n).collect();
        let mut slave = vec![None; n];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            rep[a] = b;
            slave[a] = Some(k);
        }
        let mapped: Vec<[usize; 3]> = mesh.conc_dofs.iter().map(|g| g.map(|d| rep[d])).collect();
        let pattern = scalar_pattern(n, &mapped);
        let mass = lumped_mass(mesh, &mesh.conc_dofs, n);
        let mut weights = vec![T::zero(); mesh.n_nodes()];
        for &[p, q] in &mesh.outer_edges {
            let (xp, xq) = (mesh.nodes[p], mesh.nodes[q]);
            let len = ((xp[0] - xq[0]).powi(2) + (xp[1] - xq[1]).powi(2)).sqrt();
            let (wp, wq) = match mesh.geometry {
                Geometry::Planar => (len / T::lit(2.0), len / T::lit(2.0)),
                Geometry::Axisymmetric => {
                    let c = T::lit(2.0) * T::PI() * len / T::lit(6.0);
                    (c * (T::lit(2.0) * xp[0] + xq[0]), c * (xp[0] + T::lit(2.0) * xq[0]))
                }
            };
            weights[p] = weights[p] + wp;
            weights[q] = weights[q] + wq;
        }
        let surface: Vec<(usize, T)> = (0..mesh.n_nodes())
            .filter(|&nd| mesh.tags[nd].outer)
            .map(|nd| {
                let d = mesh.conc_dof(nd, mesh.conc_dof_region[nd]);
                (d, weights[nd])
            })
            .collect();
        let surface_area = surface.iter().map(|s| s.1).sum();
        TransportSolver {
            pattern,
            mass,
            surface,
            surface_area,
            pairs,
            rep,
            slave,
            sides: InterfaceSides::from_phases(phases, constants),
            surface_c_max: phases.surface().c_max,
            tol: T::lit(1e-9),
            linear_tol: T::lit(1e-12),
            max_iter: 25,
        }
    }

    pub fn sides(&self) -> &InterfaceSides<T> {
        &self.sides
    }

    pub fn surface_area(&self) -> T {
        self.surface_area
    }

    pub fn lumped_mass(&self) -> &[T] {
        &self.mass
    }

    /// `integral(c dV)` with the lumped mass (exactly conserved by the scheme).
    pub fn total_lithium(&self, c: &[T]) -> T {
        self.mass.iter().zip(c).map(|(&m, &v)| m * v).sum()
    }

    /// Mean stoichiometry of the outer surface, weighted like the CC load
    /// (see [`Self::surface_loads`]).
    pub fn mean_surface_stoichiometry(&self, c: &[T], damage: Option<(&[T], T)>) -> T {
        let loads = self.surface_loads(damage);
        let s: T = self.surface.iter().zip(&loads).map(|(&(d, _), &w)| w * c[d]).sum();
        s / (self.surface_area * self.surface_c_max)
    }

    /// Load weights of the surface dofs, summing to the surface area. With
    /// `damage = Some((phi, k))` each weight is scaled by `g(phi)` and the set
    /// renormalised, so fully cracked faces (where `D` vanishes) take no
    /// influx while the total current is kept.
    pub fn surface_loads(&self, damage: Option<(&[T], T)>) -> Vec<T> {
        let plain: Vec<T> = self.surface.iter().map(|s| s.1).collect();
        let Some((phi, k)) = damage else {
            return plain;
        };
        // outer nodes are never on the interface, so their dof is the node index
        let scaled: Vec<T> = self.surface.iter().map(|&(d, w)| w * degradation(phi[d], k)).collect();
        let total: T = scaled.iter().copied().sum();
        if !(total > T::lit(1e-6) * self.surface_area) {
            return plain;
        }
        scaled.into_iter().map(|w| w * self.surface_area / total).collect()
    }

    pub fn surface_c_max(&self) -> T {
        self.surface_c_max
    }

    /// Slaves every core interface dof to its shell twin; returns the number
    /// of pairs whose target potential was clamped.
    pub fn enforce_interface(&self, c: &mut [T], sigma_h: &[T]) -> usize {
        let mut clamped = 0;
        for &(a, b) in &self.pairs {
            let v = interface_constraint(c[b], sigma_h[a], sigma_h[b], &self.sides);
            c[a] = v.c_core;
            clamped += usize::from(v.clamped);
        }
        clamped
    }

    /// Element residual and Jacobian (without mass and boundary terms),
    /// accumulated as `R_i` and into `jac` through the elimination maps.
    fn assemble(
        &self,
        mesh: &Mesh<T>,
        input: &TransportInput<'_, T>,
        c: &[T],
        slopes: &[T],
        mut jac: Option<&mut CsrMatrix<T>>,
    ) -> Vec<T> {
        let n = mesh.n_conc_dofs;
        let mut res = vec![T::zero(); n];
        let rt = input.constants.rt();
        for e in 0..mesh.n_elements() {
            let tri = mesh.element(e);
            let g = mesh.conc_dofs[e];
            let nodes = mesh.triangles[e];
            let ce = g.map(|d| c[d]);
            let grad_c = tri.gradient(ce);
            let grad_s = tri.gradient(g.map(|d| input.sigma_h[d]));
            let phi_e = nodes.map(|nd| input.phi[nd]);
            let mut re = [T::zero(); 3];
            let mut ke = [[T::zero(); 3]; 3];
            for qp in tri.quad_points() {
                let mat = input.phases.at(mesh.regions[e], radius(qp.x));
                let damage = if input.degrade_diffusivity {
                    degradation(interpolate(&qp.shape, phi_e), input.residual_stiffness)
                } else {
                    T::one()
                };
                let d = mat.d0 * damage;
                let mob = d * mat.omega / rt;
                let cq = interpolate(&qp.shape, ce);
                let flux = [d * grad_c[0] - cq * mob * grad_s[0], d * grad_c[1] - cq * mob * grad_s[1]];
                for i in 0..3 {
                    let gi = tri.grad[i];
                    re[i] = re[i] + qp.weight * (flux[0] * gi[0] + flux[1] * gi[1]);
                    if jac.is_some() {
                        let drift = mob * (grad_s[0] * gi[0] + grad_s[1] * gi[1]);
                        for j in 0..3 {
                            let gj = tri.grad[j];
                            ke[i][j] = ke[i][j]
                                + qp.weight * (d * (gi[0] * gj[0] + gi[1] * gj[1]) - qp.shape[j] * drift);
                        }
                    }
                }
            }
            for i in 0..3 {
                res[g[i]] = res[g[i]] + re[i];
            }
            if let Some(jac) = jac.as_deref_mut() {
                for i in 0..3 {
                    let row = self.rep[g[i]];
                    for j in 0..3 {
                        let w = if self.slave[g[j]].is_some() { slopes[g[j]] } else { T::one() };
                        jac.add(row, self.rep[g[j]], ke[i][j] * w);
                    }
                }
            }
        }
        res
    }

    fn add_mass_and_load(&self, res: &mut [T], input: &TransportInput<'_, T>, c: &[T], dt: T) {
        for (i, r) in res.iter_mut().enumerate() {
            *r = *r + self.mass[i] * (c[i] - input.c_old[i]) / dt;
        }
        if input.bc.stage == Stage::Cc {
            let damage = input.degrade_diffusivity.then_some((input.phi, input.residual_stiffness));
            for (&(d, _), w) in self.surface.iter().zip(self.surface_loads(damage)) {
                res[d] = res[d] - input.bc.j0 * w;
            }
        }
    }

    fn dirichlet_dofs(&self, bc: &TransportBC<T>) -> Vec<usize> {
        match bc.stage {
            Stage::Cc => Vec::new(),
            Stage::Cv => self.surface.iter().map(|s| s.0).collect(),
        }
    }

    /// Reduced residual: interface rows summed into the shell twin, slaved
    /// and prescribed rows removed.
    fn reduce(&self, res: &[T], fixed: &[bool]) -> Vec<T> {
        let mut out = vec![T::zero(); res.len()];
        for (i, &r) in res.iter().enumerate() {
            out[self.rep[i]] = out[self.rep[i]] + r;
        }
        for (i, v) in out.iter_mut().enumerate() {
            if fixed[i] || self.slave[i].is_some() {
                *v = T::zero();
            }
        }
        out
    }

    fn slopes(&self, c: &[T], sigma_h: &[T]) -> Vec<T> {
        let mut s = vec![T::zero(); c.len()];
        for &(a, b) in &self.pairs {
            s[a] = interface_constraint(c[b], sigma_h[a], sigma_h[b], &self.sides).dc_dshell;
        }
        s
    }

    /// Reduced residual and Jacobian at `c` (which must satisfy the interface
    /// constraint). Rows of slaved and prescribed dofs are identity.
    fn reduced_residual(&self, mesh: &Mesh<T>, input: &TransportInput<'_, T>, dt: T, c: &[T]) -> Vec<T> {
        let mut fixed = vec![false; mesh.n_conc_dofs];
        for d in self.dirichlet_dofs(&input.bc) {
            fixed[d] = true;
        }
        let slopes = self.slopes(c, input.sigma_h);
        let mut res = self.assemble(mesh, input, c, &slopes, None);
        self.add_mass_and_load(&mut res, input, c, dt);
        self.reduce(&res, &fixed)
    }

    pub fn reduced_system(
        &self,
        mesh: &Mesh<T>,
        input: &TransportInput<'_, T>,
        dt: T,
        c: &[T],
    ) -> (Vec<T>, CsrMatrix<T>) {
        let n = mesh.n_conc_dofs;
        let mut fixed = vec![false; n];
        for d in self.dirichlet_dofs(&input.bc) {
            fixed[d] = true;
        }
        let slopes = self.slopes(c, input.sigma_h);
        let mut jac = CsrMatrix::zeros(self.pattern.clone());
        let mut res = self.assemble(mesh, input, c, &slopes, Some(&mut jac));
        self.add_mass_and_load(&mut res, input, c, dt);
        for i in 0..n {
            let w = if self.slave[i].is_some() { slopes[i] } else { T::one() };
            jac.add(self.rep[i], self.rep[i], self.mass[i] / dt * w);
        }
        let reduced = self.reduce(&res, &fixed);
        // identity rows and cleared columns for slaved and prescribed dofs
        let drop: Vec<bool> = (0..n).map(|i| fixed[i] || self.slave[i].is_some()).collect();
        let mut out = CsrMatrix::zeros(self.pattern.clone());
        let pattern = self.pattern.clone();
        for i in 0..n {
            for &j in pattern.row(i) {
                let v = if drop[i] || drop[j] {
                    if i == j {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    jac.get(i, j)
                };
                if v != T::zero() {
                    out.add(i, j, v);
                }
            }
        }
        (reduced, out)
    }

    /// Mean inward flux through the outer surface implied by the discrete
    /// balance at `c` (the reaction of the prescribed surface dofs in CV).
    fn surface_inflow(&self, mesh: &Mesh<T>, input: &TransportInput<'_, T>, c: &[T], dt: T) -> T {
        match input.bc.stage {
            Stage::Cc => input.bc.j0 * self.surface_area,
            Stage::Cv => {
                let slopes = vec![T::zero(); c.len()];
                let res = self.assemble(mesh, input, c, &slopes, None);
                self.surface
                    .iter()
                    .map(|&(d, _)| res[d] + self.mass[d] * (c[d] - input.c_old[d]) / dt)
                    .sum()
            }
        }
    }

    /// One implicit Euler step. Fails on Newton divergence or negative
    /// concentration so that the caller can retry with a smaller step.
    pub fn step(
        &self,
        mesh: &Mesh<T>,
        input: &TransportInput<'_, T>,
        dt: T,
        guess: Option<&[T]>,
    ) -> Result<TransportReport<T>> {
        if !(dt > T::zero()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let n = mesh.n_conc_dofs;
        let mut c = guess.map_or_else(|| input.c_old.to_vec(), <[T]>::to_vec);
        let cv_value = input.bc.x_cv * self.surface_c_max;
        for d in self.dirichlet_dofs(&input.bc) {
            c[d] = cv_value;
        }
        let mut clamped = self.enforce_interface(&mut c, input.sigma_h);
        let rate_scale: T = self
            .mass
            .iter()
            .zip(input.c_old)
            .map(|(&m, &v)| m * v.abs())
            .sum::<T>()
            / dt;
        let floor = T::lit(1e-14) * rate_scale + T::min_positive_value();
        let mut r0 = None;
        // an update at round-off level also counts as converged; the residual
        // reference can be tiny when the applied flux is
        let step_floor = T::lit(1e-12) * self.surface_c_max;
        let mut last_update = T::infinity();
        for it in 0..=self.max_iter {
            let (res, jac) = self.reduced_system(mesh, input, dt, &c);
            let rn = norm2(&res);
            let reference = *r0.get_or_insert(rn);
            let rel = if reference > T::zero() { rn / reference } else { T::zero() };
            if !rn.is_finite() {
                return Err(Error::NonPhysical("non-finite transport residual".into()));
            }
            log::trace!("transport it {it}: |r| {rn:.3e} rel {rel:.3e} update {last_update:.3e} clamped {clamped}");
            if rn <= (self.tol * reference).max(floor) || last_update <= step_floor {
                if let Some(i) = (0..n).find(|&i| c[i] < T::lit(-1e-12) * self.surface_c_max) {
                    return Err(Error::NonPhysical(format!(
                        "negative concentration {} at dof {i}",
                        c[i]
                    )));
                }
                let inflow = self.surface_inflow(mesh, input, &c, dt);
                return Ok(TransportReport {
                    c,
                    iterations: it,
                    relative_residual: rel,
                    surface_inflow: inflow,
                    mean_surface_flux: inflow / self.surface_area,
                    clamped_pairs: clamped,
                });
            }
            if it == self.max_iter {
                break;
            }
            let rhs: Vec<T> = res.iter().map(|&v| -v).collect();
            let mut du = vec![T::zero(); n];
            bicgstab(&jac, &rhs, &mut du, self.linear_tol, 20 * n + 100)?;
            // backtracking on |r|: the piecewise-linear OCP tables make the
            // constraint only piecewise smooth, and full steps can cycle
            let mut alpha = T::one();
            let mut trial = c.clone();
            for _ in 0..12 {
                for i in 0..n {
                    if self.slave[i].is_none() {
                        trial[i] = c[i] + alpha * du[i];
                    }
                }
                self.enforce_interface(&mut trial, input.sigma_h);
                let rt = norm2(&self.reduced_residual(mesh, input, dt, &trial));
                if rt <= (T::one() - T::lit(1e-4) * alpha) * rn {
                    break;
                }
                alpha = alpha * T::lit(0.5);
            }
            last_update = du.iter().fold(T::zero(), |m, v| m.max(v.abs())) * alpha;
            c = trial;
            clamped = self.enforce_interface(&mut c, input.sigma_h);
        }
        let (res, _) = self.reduced_system(mesh, input, dt, &c);
        Err(Error::NoConvergence {
            solver: "transport newton",
            iterations: self.max_iter,
            residual: norm2(&res).as_f64(),
            tol: self.tol.as_f64(),
        })
    }
}
