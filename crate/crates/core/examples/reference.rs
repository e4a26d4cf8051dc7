//! Reference surface-crack lithiation at a selectable resolution.
//!
//! `cargo run --release --example reference -- [coarsening] [bonding ratio] [hbar] [degrade]`

use coreshell::driver::{FieldState, Observer, Protocol, Scheme, Simulation};
use coreshell::interface::InterfaceParams;
use coreshell::material::{Material, Phases, PhysicalConstants};
use coreshell::metrics::{ClassifierSettings, MetricsRow};
use coreshell::mesh::{CrackLocation, Grading, MeshResolution, ParticleSpec};

struct Print;

impl Observer<f64> for Print {
    fn on_step(&mut self, _: &Simulation<f64>, _: &FieldState<f64>, r: &MetricsRow) {
        if r.step % 10 == 0 {
            println!(
                "{:5} t={:8.1} {} SOL={:.4} dSOL={:+.3} ac={:.3e} arc={:5.1} J={:.3e} dt={:.2e} it={}",
                r.step, r.time, r.stage, r.sol, r.delta_sol, r.crack_volume, r.debond_arc, r.surface_flux, r.dt, r.inner_iterations
            );
        }
    }
}

fn main() {
    env_logger::init();
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let coarsen = args.first().copied().unwrap_or(1.0);
    let ratio = args.get(1).copied().unwrap_or(1.0);
    let hbar = args.get(2).copied().unwrap_or(0.2);
    let degrade = args.get(3).copied().unwrap_or(1.0) != 0.0;
    let spec = ParticleSpec::from_relative(4e-6, hbar).with_crack(CrackLocation::Surface, 0.3 * hbar * 4e-6);
    let phases = Phases::new(Material::nmc811(), Material::nmc532(), Grading::UniformShell, 4e-6, 4e-6 * (1.0 + hbar));
    let interface = InterfaceParams::from_bonding_ratio(1e-7, ratio, &phases);
    let res = MeshResolution::from_length_scales(coarsen * phases.ell_min(), coarsen * 1e-7, 0.5e-6);
    let scheme = Scheme { degrade_diffusivity: degrade, ..Scheme::default() };
    let mut sim = Simulation::new(
        spec,
        phases,
        PhysicalConstants::default(),
        interface,
        Protocol::default(),
        scheme,
        ClassifierSettings::default(),
        &res,
    )
    .unwrap();
    println!("elements {} nodes {} j0 {:.4e}", sim.mesh.n_elements(), sim.mesh.n_nodes(), sim.j0);
    let out = sim.run(&mut Print).unwrap();
    println!(
        "termination {:?} final SOL {:.4} pattern {} cv_start {:?} debond {:?} rejected {} wall {:.1}s",
        out.termination,
        out.final_sol(),
        out.pattern,
        out.cv_start,
        out.debond_onset,
        out.rejected_steps,
        out.wall_seconds
    );
}
