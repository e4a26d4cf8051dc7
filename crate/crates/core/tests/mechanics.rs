use coreshell::material::{Material, Phases};
use coreshell::fem::DirichletSet;
use coreshell::mechanics::{MechanicsInput, MechanicsSolver};
use coreshell::fem::SolverOptions;
use coreshell::mesh::{build_particle_mesh, Grading, Mesh, MeshResolution, ParticleSpec, Region};

fn particle(bulk: f64, band: f64) -> Mesh<f64> {
    let spec = ParticleSpec::from_relative(4e-6, 0.2);
    let res = MeshResolution {
        bulk,
        interface_band: band,
        crack_band: band,
        interface_halfwidth: 0.2e-6,
        grading: 0.3,
    };
    build_particle_mesh(&spec, &res).unwrap()
}

fn uniform_phases(mesh: &Mesh<f64>) -> Phases<f64> {
    let m = Material::nmc811();
    Phases::new(m.clone(), m, Grading::UniformShell, mesh.core_radius, mesh.outer_radius)
}

/// Misfitting core in a bonded shell, identical elastic constants.
struct Lame {
    k: f64,
    g: f64,
    eig: f64,
    a: f64,
    b: f64,
}

impl Lame {
    fn constants(&self) -> (f64, f64, f64) {
        let c = 3.0 * self.k * self.eig * self.a.powi(3) / (3.0 * self.k + 4.0 * self.g);
        let bb = 4.0 * self.g * c / (3.0 * self.k * self.b.powi(3));
        (bb + c / self.a.powi(3), bb, c)
    }

    /// Spherical (radial, hoop) stresses.
    fn stress(&self, rho: f64) -> (f64, f64) {
        let (a_, b_, c_) = self.constants();
        if rho < self.a {
            let s = 3.0 * self.k * (a_ - self.eig);
            (s, s)
        } else {
            (
                3.0 * self.k * b_ - 4.0 * self.g * c_ / rho.powi(3),
                3.0 * self.k * b_ + 2.0 * self.g * c_ / rho.powi(3),
            )
        }
    }
}

#[test]
fn free_swelling_is_stress_free() {
    let mesh = particle(0.5e-6, 0.25e-6);
    let phases = uniform_phases(&mesh);
    let dc = 2000.0;
    let c = vec![dc; mesh.n_conc_dofs];
    let c0 = vec![0.0; mesh.n_conc_dofs];
    let phi = vec![0.0; mesh.n_nodes()];
    let input = MechanicsInput {
        phases: &phases,
        c: &c,
        c0: &c0,
        phi: &phi,
        residual_stiffness: 1e-6,
    };
    let mut solver = MechanicsSolver::new(&mesh).unwrap();
    let rep = solver.solve_equilibrium(&mesh, &input, None).unwrap();
    let mat = phases.at(Region::Core, 0.0);
    let scale = mat.bulk_modulus() * mat.omega * dc;
    assert!(rep.stress.max_abs_stress() < 1e-6 * scale, "{}", rep.stress.max_abs_stress());
    let strain = mat.omega * dc / 3.0;
    for (n, p) in mesh.nodes.iter().enumerate() {
        let [ur, uz] = rep.displacement.at(n);
        let tol = 1e-6 * strain * mesh.outer_radius;
        assert!((ur - strain * p[0]).abs() <= tol && (uz - strain * p[1]).abs() <= tol);
    }
}

/// Half-width of the refined interface band excluded from the comparison.
const BAND: f64 = 0.5e-6;

#[test]
fn misfit_sphere_matches_lame_solution() {
    let spec = ParticleSpec::from_relative(4e-6, 0.2);
    let mesh = build_particle_mesh(&spec, &MeshResolution::from_length_scales(0.23e-6, 0.1e-6, 0.5e-6)).unwrap();
    let phases = uniform_phases(&mesh);
    let dc = 1000.0;
    let c: Vec<f64> = (0..mesh.n_conc_dofs)
        .map(|d| if mesh.conc_dof_region[d] == Region::Core { dc } else { 0.0 })
        .collect();
    let c0 = vec![0.0; mesh.n_conc_dofs];
    let phi = vec![0.0; mesh.n_nodes()];
    let input = MechanicsInput {
        phases: &phases,
        c: &c,
        c0: &c0,
        phi: &phi,
        residual_stiffness: 1e-6,
    };
    let mut solver = MechanicsSolver::new(&mesh).unwrap();
    let rep = solver.solve_equilibrium(&mesh, &input, None).unwrap();
    let mat = phases.at(Region::Core, 0.0);
    let lame = Lame {
        k: mat.bulk_modulus(),
        g: mat.shear_modulus(),
        eig: mat.omega * dc / 3.0,
        a: mesh.core_radius,
        b: mesh.outer_radius,
    };
    // relative L2 errors of the quadrature-point stresses
    let mut num = [0.0; 3];
    let mut den = [0.0; 3];
    for e in 0..mesh.n_elements() {
        for (q, qp) in mesh.element(e).quad_points().iter().enumerate() {
            let rho = (qp.x[0].powi(2) + qp.x[1].powi(2)).sqrt();
            if (rho - lame.a).abs() < BAND {
                continue;
            }
            let n = [qp.x[0] / rho, qp.x[1] / rho];
            let s = rep.stress.stress[e][q];
            let radial = n[0] * n[0] * s[0] + n[1] * n[1] * s[1] + 2.0 * n[0] * n[1] * s[3];
            let (ex_rr, ex_tt) = lame.stress(rho);
            let ex_h = (ex_rr + 2.0 * ex_tt) / 3.0;
            for (k, (v, ex)) in [(radial, ex_rr), (s[2], ex_tt), (rep.stress.hydrostatic[e][q], ex_h)]
                .into_iter()
                .enumerate()
            {
                num[k] += qp.weight * (v - ex).powi(2);
                den[k] += qp.weight * ex.powi(2);
            }
        }
    }
    let err: Vec<f64> = (0..3).map(|k| (num[k] / den[k]).sqrt()).collect();
    assert!(err.iter().all(|&e| e < 0.02), "{err:?}");

    let nodal = solver
        .nodal_hydrostatic_stress(&mesh, &rep.stress, &SolverOptions::default(), None)
        .unwrap();
    let core_h = lame.stress(0.0).0;
    let scale = lame.stress(lame.a).0.abs();
    for d in 0..mesh.n_conc_dofs {
        let node = mesh.conc_dof_node[d];
        let p = mesh.nodes[node];
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if (rho - lame.a).abs() < BAND || mesh.tags[node].outer {
            continue;
        }
        let (rr, tt) = lame.stress(rho);
        let ex = (rr + 2.0 * tt) / 3.0;
        assert!((nodal[d] - ex).abs() < 0.02 * scale, "{} vs {ex} at {rho}", nodal[d]);
        if rho < lame.a {
            assert!((nodal[d] - core_h).abs() < 0.02 * core_h.abs());
        }
    }

    // the cut plane carries no net axial force
    let (_, fz) = solver.reaction_sum(&mesh, &input, &rep.displacement);
    assert!(fz.abs() < 1e-9 * scale * mesh.outer_radius.powi(2), "{fz}");
}

#[test]
fn full_damage_scales_tensile_stress_by_residual_stiffness() {
    // clamped strip with uniform shrinkage: every point is in volumetric tension
    let mesh = Mesh::planar_strip(1e-6, 0.5e-6, 6, 5).unwrap();
    let phases = uniform_phases(&mesh);
    let mut bc = DirichletSet::new();
    for (n, p) in mesh.nodes.iter().enumerate() {
        if mesh.tags[n].outer || p[1] == 0.0 || (p[1] - 0.5e-6).abs() < 1e-15 {
            bc.insert(2 * n, 0.0);
            bc.insert(2 * n + 1, 0.0);
        }
    }
    let c = vec![0.0; mesh.n_conc_dofs];
    let c0 = vec![1000.0; mesh.n_conc_dofs];
    let solve = |phi: f64| {
        let phi = vec![phi; mesh.n_nodes()];
        let input = MechanicsInput {
            phases: &phases,
            c: &c,
            c0: &c0,
            phi: &phi,
            residual_stiffness: 1e-6,
        };
        MechanicsSolver::with_constraints(&mesh, bc.clone())
            .unwrap()
            .solve_equilibrium(&mesh, &input, None)
            .unwrap()
    };
    let intact = solve(0.0);
    let broken = solve(1.0);
    let ratio = 1e-6 / (1.0 + 1e-6);
    for e in 0..mesh.n_elements() {
        for q in 0..3 {
            let (a, b) = (intact.stress.stress[e][q], broken.stress.stress[e][q]);
            assert!(intact.stress.hydrostatic[e][q] > 0.0);
            for k in 0..4 {
                assert!((b[k] - ratio * a[k]).abs() <= 1e-9 * ratio * a[0].abs());
            }
        }
    }
}
