use coreshell::material::{Material, Phases};
use coreshell::mesh::{build_particle_mesh, Grading, Mesh, MeshResolution, ParticleSpec, Region};
use coreshell::metrics::{classify_pattern, compute_crack_volume, compute_sol, ClassifierSettings, CrackPattern};
use std::f64::consts::PI;

const R: f64 = 4e-6;
const ELL: f64 = 0.25e-6;
const L_ZETA: f64 = 1e-7;

fn mesh() -> Mesh<f64> {
    let spec = ParticleSpec::from_relative(R, 0.2);
    let res = MeshResolution {
        bulk: 0.15e-6,
        interface_band: 0.06e-6,
        crack_band: 0.1e-6,
        interface_halfwidth: 0.25e-6,
        grading: 0.3,
    };
    build_particle_mesh(&spec, &res).unwrap()
}

fn phases(mesh: &Mesh<f64>) -> Phases<f64> {
    Phases::new(Material::nmc811(), Material::nmc532(), Grading::UniformShell, mesh.core_radius, mesh.outer_radius)
}

fn rho(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

fn angle_deg(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0]).to_degrees()
}

#[test]
fn sol_core_full_shell_empty() {
    let m = mesh();
    let ph = phases(&m);
    let c: Vec<f64> = (0..m.n_conc_dofs)
        .map(|d| if m.conc_dof_region[d] == Region::Core { ph.core.props.c_max } else { 0.0 })
        .collect();
    let s = compute_sol(&m, &c, &ph);
    // sphere volume arithmetic
    let v1 = 4.0 / 3.0 * PI * R.powi(3);
    let v2 = 4.0 / 3.0 * PI * ((1.2 * R).powi(3) - R.powi(3));
    let (c1, c2) = (ph.core.props.c_max, ph.shell.props.c_max);
    let expect = v1 * c1 / (v1 * c1 + v2 * c2);
    assert!((expect - 0.592).abs() < 5e-3, "oracle {expect}");
    assert!((s.total - expect).abs() < 2e-3, "{} vs {expect}", s.total);
    assert!((s.core - 1.0).abs() < 1e-12);
    assert!(s.shell.abs() < 1e-12);
    assert!((s.delta - 1.0).abs() < 1e-12);
    assert!((s.delta - (s.core - s.shell)).abs() < 1e-15);
}

#[test]
fn sol_endpoints() {
    let m = mesh();
    let ph = phases(&m);
    let full: Vec<f64> = (0..m.n_conc_dofs)
        .map(|d| if m.conc_dof_region[d] == Region::Core { ph.core.props.c_max } else { ph.shell.props.c_max })
        .collect();
    assert!((compute_sol(&m, &full, &ph).total - 1.0).abs() < 1e-12);
    assert_eq!(compute_sol(&m, &vec![0.0; m.n_conc_dofs], &ph).total, 0.0);
}

#[test]
fn crack_volume_trivial() {
    let m = mesh();
    let n = m.n_nodes();
    assert_eq!(compute_crack_volume(&m, &vec![0.96; n], 0.95), 1.0);
    assert_eq!(compute_crack_volume(&m, &vec![0.94; n], 0.95), 0.0);
}

#[test]
fn crack_volume_equatorial_band_matches_element_sum() {
    let m = mesh();
    let z0 = 1.0e-6;
    let phi: Vec<f64> = m.nodes.iter().map(|p| if p[1] <= z0 { 0.96 } else { 0.0 }).collect();
    // an element with one node at zero interpolates below 0.95 at every
    // interior quadrature point, so the cracked set is the set of elements
    // lying wholly in the band; volumes by Pappus
    let pappus = |e: usize| {
        let [a, b, c] = m.triangles[e].map(|n| m.nodes[n]);
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
        2.0 * PI * area * (a[0] + b[0] + c[0]) / 3.0
    };
    let mut band = 0.0;
    let mut total = 0.0;
    for e in 0..m.n_elements() {
        let v = pappus(e);
        total += v;
        if m.triangles[e].iter().all(|&n| m.nodes[n][1] <= z0) {
            band += v;
        }
    }
    let got = compute_crack_volume(&m, &phi, 0.95);
    assert!((got - band / total).abs() < 1e-12, "{got} vs {}", band / total);
    // and the band is roughly the spherical slab fraction
    let ro: f64 = m.outer_radius;
    let slab = (z0 * ro * ro - z0.powi(3) / 3.0) / (2.0 / 3.0 * ro.powi(3));
    assert!((got - slab).abs() < 0.05, "{got} vs slab {slab}");
}

/// Smooth painted damage: 1 inside the shape, exponential tail outside.
struct Painter<'a> {
    mesh: &'a Mesh<f64>,
    phi: Vec<f64>,
}

impl<'a> Painter<'a> {
    fn new(mesh: &'a Mesh<f64>) -> Self {
        Painter { mesh, phi: vec![0.0; mesh.n_nodes()] }
    }

    /// `dist` is the distance outside the shape (0 inside).
    fn paint(mut self, dist: impl Fn([f64; 2]) -> f64) -> Self {
        for (n, p) in self.mesh.nodes.iter().enumerate() {
            let v = (-dist(*p) / (0.2 * ELL)).exp();
            self.phi[n] = self.phi[n].max(v);
        }
        self
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2], halfwidth: f64) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let q = [a[0] + t * dx, a[1] + t * dy];
    ((p[0] - q[0]).hypot(p[1] - q[1]) - halfwidth).max(0.0)
}

fn surface_seed(p: [f64; 2]) -> f64 {
    segment_distance(p, [4.3e-6, 0.0], [4.9e-6, 0.0], 0.2e-6)
}

fn zeta(mesh: &Mesh<f64>) -> Vec<f64> {
    mesh.nodes.iter().map(|&p| (-(rho(p) - R).abs() / L_ZETA).exp()).collect()
}

fn label(mesh: &Mesh<f64>, init: &[f64], fin: &[f64], threshold: f64) -> CrackPattern {
    let settings = ClassifierSettings { threshold, ..Default::default() };
    classify_pattern(mesh, init, fin, &zeta(mesh), ELL, &settings)
}

fn assert_stable(mesh: &Mesh<f64>, init: &[f64], fin: &[f64], expect: &str) {
    for thr in [0.94, 0.95, 0.96] {
        let got = label(mesh, init, fin, thr);
        assert_eq!(got.to_string(), expect, "threshold {thr}");
    }
}

#[test]
fn no_growth_is_empty() {
    let m = mesh();
    let init = Painter::new(&m).paint(surface_seed).phi;
    let p = label(&m, &init, &init, 0.95);
    assert!(p.is_empty(), "{p}");
}

#[test]
fn propagation_and_surface_initiation() {
    let m = mesh();
    let init = Painter::new(&m).paint(surface_seed).phi;
    let fin = Painter::new(&m)
        .paint(|p| segment_distance(p, [2.5e-6, 0.0], [4.9e-6, 0.0], 0.2e-6))
        // separate surface-breaking crack at 60 degrees
        .paint(|p| {
            let a = 60f64.to_radians();
            segment_distance(p, [4.3e-6 * a.cos(), 4.3e-6 * a.sin()], [4.9e-6 * a.cos(), 4.9e-6 * a.sin()], 0.2e-6)
        })
        .phi;
    assert_stable(&m, &init, &fin, "P+I");
}

#[test]
fn short_extension_is_not_propagation() {
    let m = mesh();
    let init = Painter::new(&m).paint(surface_seed).phi;
    // inward growth well below the required distance
    let fin = Painter::new(&m)
        .paint(|p| segment_distance(p, [4.27e-6, 0.0], [4.9e-6, 0.0], 0.2e-6))
        .phi;
    assert!(!label(&m, &init, &fin, 0.95).propagation);
}

fn interface_arc(lo_deg: f64, hi_deg: f64) -> impl Fn([f64; 2]) -> f64 {
    move |p: [f64; 2]| {
        let radial = ((rho(p) - R).abs() - 0.12e-6).max(0.0);
        let a = angle_deg(p);
        let ang = if a < lo_deg {
            (lo_deg - a).to_radians() * R
        } else if a > hi_deg {
            (a - hi_deg).to_radians() * R
        } else {
            0.0
        };
        radial.hypot(ang)
    }
}

#[test]
fn interface_seed_debonds() {
    let m = mesh();
    let seed = |p: [f64; 2]| segment_distance(p, [3.7e-6, 0.0], [4.3e-6, 0.0], 0.15e-6);
    let init = Painter::new(&m).paint(seed).phi;
    // interface crack running from the seed along the interface to 35 degrees
    let fin = Painter::new(&m).paint(seed).paint(interface_arc(0.0, 35.0)).phi;
    assert_stable(&m, &init, &fin, "DB");
}

#[test]
fn short_interface_arc_is_not_debonding() {
    let m = mesh();
    let init = Painter::new(&m).paint(surface_seed).phi;
    let fin = Painter::new(&m).paint(surface_seed).paint(interface_arc(40.0, 44.0)).phi;
    assert!(!label(&m, &init, &fin, 0.95).debonding);
}

#[test]
fn two_arms_from_the_tip_branch() {
    let m = mesh();
    let tip = [1.2e-6, 0.0];
    let seed = |p: [f64; 2]| segment_distance(p, [0.0, 0.0], tip, 0.15e-6);
    let init = Painter::new(&m).paint(seed).phi;
    let fin = Painter::new(&m)
        .paint(seed)
        .paint(|p| segment_distance(p, tip, [3.0e-6, 0.0], 0.25e-6))
        .paint(|p| segment_distance(p, tip, [tip[0], 1.8e-6], 0.25e-6))
        .phi;
    let p = label(&m, &init, &fin, 0.95);
    assert!(p.branching && p.propagation, "{p}");
    // a single arm does not branch
    let one = Painter::new(&m)
        .paint(seed)
        .paint(|p| segment_distance(p, tip, [3.0e-6, 0.0], 0.25e-6))
        .phi;
    let p = label(&m, &init, &one, 0.95);
    assert!(!p.branching && p.propagation, "{p}");
}
