//! Analytic-oracle verification suite behind the `check` command. Each check
//! solves a problem with a closed-form answer using the production solvers.

use std::time::Instant;

use serde::Serialize;

use crate::config::{ell_from_strength, gc_from_kc};
use crate::error::Result;
use crate::fem::{scalar_pattern, ScalarField, SolverOptions};
use crate::fracture::{solve_phase_field, HistoryField};
use crate::interface::{blend_toughness, solve_interface_indicator};
use crate::fem::element::N_QP;
use crate::material::{Material, Phases, PhysicalConstants};
use crate::mechanics::{MechanicsInput, MechanicsSolver};
use crate::mesh::{build_particle_mesh, radius, Grading, Mesh, MeshResolution, ParticleSpec, Region};
use crate::transport::{Stage, TransportBC, TransportInput, TransportSolver};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// Worst measured error.
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn check(name: &'static str, start: Instant, error: f64, tolerance: f64, detail: String) -> Check {
    Check {
        name,
        error,
        tolerance,
        passed: error.is_finite() && error < tolerance,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Tabulated toughness and length scale from the indentation inputs.
pub fn derivation() -> Check {
    let t = Instant::now();
    let cases = [(0.271, 230e9, 0.299, 0.23e-6), (0.296, 201e9, 0.408, 0.27e-6)];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (k_c, e, g_ref, l_ref) in cases {
        let g: f64 = gc_from_kc(k_c, e, 0.253);
        let l: f64 = ell_from_strength(k_c, 184.0);
        worst = worst.max((g / g_ref - 1.0).abs()).max((l / l_ref - 1.0).abs());
        detail.push(format!("K_c {k_c}: G_c {g:.4} N/m, l {:.4} um", l * 1e6));
    }
    check("parameter derivation", t, worst, 0.02, detail.join("; "))
}

/// `c(r, t) - c0` in a sphere of radius `a` under constant influx `f`
/// (series in the roots of `tan x = x`).
pub fn constant_flux_sphere(r: f64, t: f64, a: f64, d: f64, f: f64, roots: &[f64]) -> f64 {
    let tau = d * t / (a * a);
    let sum: f64 = roots
        .iter()
        .map(|&al| {
            let spatial = if r < 1e-9 * a { al * a } else { (al * r / a).sin() * a / r };
            spatial / (al * al * al.sin()) * (-al * al * tau).exp()
        })
        .sum();
    f * a / d * (3.0 * tau + r * r / (2.0 * a * a) - 0.3 - 2.0 * sum)
}

/// First `n` positive roots of `tan x = x` by bisection.
pub fn tan_roots(n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (1..=n)
        .map(|k| {
            let (mut lo, mut hi) = (k as f64 * pi, (k as f64 + 0.5) * pi - 1e-12);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid.tan() > mid {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

fn uniform_particle(size: f64) -> Result<Mesh<f64>> {
    let spec = ParticleSpec::from_relative(4e-6, 0.2);
    let res = MeshResolution {
        bulk: size,
        interface_band: size,
        crack_band: size,
        interface_halfwidth: 0.0,
        grading: 0.3,
    };
    build_particle_mesh(&spec, &res)
}

fn single_phase(mesh: &Mesh<f64>, omega: f64) -> Phases<f64> {
    let mut m = Material::nmc811();
    m.props.omega = omega;
    Phases::new(m.clone(), m, Grading::UniformShell, mesh.core_radius, mesh.outer_radius)
}

fn sealed() -> TransportBC<f64> {
    TransportBC {
        stage: Stage::Cc,
        j0: 0.0,
        x_cv: 0.98,
        cutoff_fraction: 0.1,
    }
}

/// Single-material sphere, no stress coupling, constant influx.
pub fn transport_sphere() -> Result<Check> {
    let t = Instant::now();
    let mesh = uniform_particle(0.15e-6)?;
    let phases = single_phase(&mesh, 0.0);
    let consts = PhysicalConstants::default();
    let solver = TransportSolver::new(&mesh, &phases, &consts);
    let (a, d, j0, c0) = (mesh.outer_radius, phases.core.props.d0, 2.25e-5, 5000.0);
    let t_end = 0.1 * a * a / d;
    let steps = 400;
    let mut c = vec![c0; mesh.n_conc_dofs];
    let (sigma, phi) = (vec![0.0; mesh.n_conc_dofs], vec![0.0; mesh.n_nodes()]);
    for _ in 0..steps {
        let input = TransportInput {
            phases: &phases,
            constants: &consts,
            c_old: &c,
            sigma_h: &sigma,
            phi: &phi,
            residual_stiffness: 1e-6,
            degrade_diffusivity: false,
            bc: TransportBC { j0, ..sealed() },
        };
        c = solver.step(&mesh, &input, t_end / steps as f64, None)?.c;
    }
    let roots = tan_roots(60);
    let mass = solver.lumped_mass();
    let (mut num, mut den) = (0.0, 0.0);
    for dof in 0..mesh.n_conc_dofs {
        let exact = constant_flux_sphere(radius(mesh.nodes[mesh.conc_dof_node[dof]]), t_end, a, d, j0, &roots);
        num += mass[dof] * (c[dof] - c0 - exact).powi(2);
        den += mass[dof] * exact.powi(2);
    }
    let err = (num / den).sqrt();
    let across = (a / 0.15e-6).round();
    Ok(check(
        "transport constant-flux sphere",
        t,
        err,
        0.01,
        format!("relative L2 of the rise, 60 series terms, about {across} elements across the radius"),
    ))
}

/// Misfitting core in a shell of equal stiffness against the Lame solution.
pub fn mechanics_misfit() -> Result<Check> {
    let t = Instant::now();
    let spec = ParticleSpec::from_relative(4e-6, 0.2);
    let mesh = build_particle_mesh(&spec, &MeshResolution::from_length_scales(0.23e-6, 0.1e-6, 0.5e-6))?;
    let phases = single_phase(&mesh, Material::<f64>::nmc811().props.omega);
    let dc = 1000.0;
    let c: Vec<f64> = (0..mesh.n_conc_dofs)
        .map(|d| if mesh.conc_dof_region[d] == Region::Core { dc } else { 0.0 })
        .collect();
    let (c0, phi) = (vec![0.0; mesh.n_conc_dofs], vec![0.0; mesh.n_nodes()]);
    let input = MechanicsInput {
        phases: &phases,
        c: &c,
        c0: &c0,
        phi: &phi,
        residual_stiffness: 1e-6,
    };
    let mut solver = MechanicsSolver::new(&mesh)?;
    let rep = solver.solve_equilibrium(&mesh, &input, None)?;
    let m = phases.at(Region::Core, 0.0);
    let (k, g, eig, ra, rb) = (m.bulk_modulus(), m.shear_modulus(), m.omega * dc / 3.0, mesh.core_radius, mesh.outer_radius);
    let cc = 3.0 * k * eig * ra.powi(3) / (3.0 * k + 4.0 * g);
    let bb = 4.0 * g * cc / (3.0 * k * rb.powi(3));
    let aa = bb + cc / ra.powi(3);
    let exact = |rho: f64| {
        if rho < ra {
            let s = 3.0 * k * (aa - eig);
            (s, s)
        } else {
            (3.0 * k * bb - 4.0 * g * cc / rho.powi(3), 3.0 * k * bb + 2.0 * g * cc / rho.powi(3))
        }
    };
    let (mut num, mut den) = ([0.0; 3], [0.0; 3]);
    for e in 0..mesh.n_elements() {
        for (q, qp) in mesh.element(e).quad_points().iter().enumerate() {
            let rho = radius(qp.x);
            if (rho - ra).abs() < 0.5e-6 {
                continue;
            }
            let n = [qp.x[0] / rho, qp.x[1] / rho];
            let s = rep.stress.stress[e][q];
            let rr = n[0] * n[0] * s[0] + n[1] * n[1] * s[1] + 2.0 * n[0] * n[1] * s[3];
            let (er, et) = exact(rho);
            for (i, (v, ex)) in [(rr, er), (s[2], et), (rep.stress.hydrostatic[e][q], (er + 2.0 * et) / 3.0)]
                .into_iter()
                .enumerate()
            {
                num[i] += qp.weight * (v - ex).powi(2);
                den[i] += qp.weight * ex * ex;
            }
        }
    }
    let errs: Vec<f64> = (0..3).map(|i| (num[i] / den[i]).sqrt()).collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Ok(check(
        "mechanics misfit sphere",
        t,
        worst,
        0.02,
        format!("relative L2 of sigma_rr {:.2e}, sigma_tt {:.2e}, sigma_h {:.2e} outside the interface band", errs[0], errs[1], errs[2]),
    ))
}

/// Uniform history on an uncracked patch gives the homogeneous AT2 solution.
pub fn at2_homogeneous() -> Result<Check> {
    let t = Instant::now();
    let mesh = Mesh::<f64>::planar_strip(2e-6, 1e-6, 6, 4)?;
    let m = Material::nmc811();
    let ph = Phases::new(m.clone(), m, Grading::UniformShell, mesh.core_radius, mesh.outer_radius);
    let pat = scalar_pattern(mesh.n_nodes(), &mesh.triangles);
    let p = ph.at(Region::Core, 0.0);
    let gc = ScalarField::constant(mesh.n_nodes(), p.g_c);
    let opts = SolverOptions {
        tol: 1e-12,
        ..SolverOptions::default()
    };
    let mut worst: f64 = 0.0;
    for h in [1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8] {
        let hist = HistoryField(vec![[h; N_QP]; mesh.n_elements()]);
        let phi = solve_phase_field(&mesh, &pat, &hist, &gc, &ph, &opts, None)?;
        let expect = 2.0 * h / (p.g_c / p.ell + 2.0 * h);
        worst = phi.iter().fold(worst, |w, v| w.max((v - expect).abs()));
    }
    Ok(check("AT2 homogeneous damage", t, worst, 1e-6, "max |phi - 2H/(G_c/l + 2H)| over H in [1e2, 1e8]".into()))
}

/// Slab indicator against `exp(-d / l_zeta)` and exact toughness endpoints.
pub fn interface_profile() -> Result<Check> {
    let t = Instant::now();
    let l: f64 = 0.1e-6;
    let mesh = Mesh::<f64>::planar_strip(3e-6, 0.05e-6, 300, 1)?;
    let opts = SolverOptions {
        tol: 1e-13,
        ..SolverOptions::default()
    };
    let zeta = solve_interface_indicator(&mesh, l, &opts)?;
    let mut worst: f64 = 0.0;
    for (n, p) in mesh.nodes.iter().enumerate() {
        let d = p[0].abs();
        if d <= 5.0 * l {
            worst = worst.max((zeta[n] / (-d / l).exp() - 1.0).abs());
        }
    }
    let endpoints = (blend_toughness(0.0_f64, 0.408, 0.12) - 0.408).abs() + (blend_toughness(1.0_f64, 0.408, 0.12) - 0.12).abs();
    let err = if endpoints == 0.0 { worst } else { f64::INFINITY };
    Ok(check(
        "diffuse interface profile",
        t,
        err,
        0.02,
        format!("max relative deviation within 5 l_zeta {worst:.2e}; endpoint error {endpoints:e}"),
    ))
}

/// Sealed two-phase particle: lithium drift per step.
pub fn sealed_conservation() -> Result<Check> {
    let t = Instant::now();
    let mesh = uniform_particle(0.4e-6)?;
    let phases = Phases::new(Material::nmc811(), Material::nmc532(), Grading::UniformShell, mesh.core_radius, mesh.outer_radius);
    let consts = PhysicalConstants::default();
    let solver = TransportSolver::new(&mesh, &phases, &consts);
    let sigma: Vec<f64> = (0..mesh.n_conc_dofs)
        .map(|d| {
            let rho = radius(mesh.nodes[mesh.conc_dof_node[d]]) / mesh.outer_radius;
            if mesh.conc_dof_region[d] == Region::Core { 1e8 * rho } else { -5e7 }
        })
        .collect();
    let phi = vec![0.0; mesh.n_nodes()];
    let mut c: Vec<f64> = (0..mesh.n_conc_dofs)
        .map(|d| {
            let rho = radius(mesh.nodes[mesh.conc_dof_node[d]]) / mesh.outer_radius;
            if mesh.conc_dof_region[d] == Region::Core { 15000.0 + 3000.0 * rho } else { 9000.0 + 8000.0 * rho * rho }
        })
        .collect();
    solver.enforce_interface(&mut c, &sigma);
    let start = solver.total_lithium(&c);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let input = TransportInput {
            phases: &phases,
            constants: &consts,
            c_old: &c,
            sigma_h: &sigma,
            phi: &phi,
            residual_stiffness: 1e-6,
            degrade_diffusivity: true,
            bc: sealed(),
        };
        let next = solver.step(&mesh, &input, 5.0, None)?.c;
        worst = worst.max((solver.total_lithium(&next) - solver.total_lithium(&c)).abs() / start);
        c = next;
    }
    Ok(check("sealed-system conservation", t, worst, 1e-8, "max relative lithium drift per step over 100 steps".into()))
}

/// Runs every check; a solver failure counts as a failed check.
pub fn run_all() -> Vec<Check> {
    type Runner = fn() -> Result<Check>;
    let mut out = vec![derivation()];
    let runners: [(&'static str, Runner); 5] = [
        ("transport constant-flux sphere", transport_sphere),
        ("mechanics misfit sphere", mechanics_misfit),
        ("AT2 homogeneous damage", at2_homogeneous),
        ("diffuse interface profile", interface_profile),
        ("sealed-system conservation", sealed_conservation),
    ];
    for (name, f) in runners {
        let t = Instant::now();
        out.push(f().unwrap_or_else(|e| check(name, t, f64::INFINITY, 0.0, format!("solver failure: {e}"))));
    }
    out
}
