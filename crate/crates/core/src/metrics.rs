//! Scalar degradation metrics and crack-pattern classification.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fem::element::interpolate;
use crate::material::Phases;
use crate::mesh::{radius, Mesh, Region};
use crate::real::Real;
use crate::transport::Stage;

/// Damage level above which material counts as fully cracked.
pub const CRACK_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sol<T> {
    pub total: T,
    pub core: T,
    pub shell: T,
    /// `core - shell`.
    pub delta: T,
}

/// State of lithiation: lithium content over the lithiated capacity, for the
/// whole particle and per region. Concentration is on the duplicated layout.
pub fn compute_sol<T: Real>(mesh: &Mesh<T>, c: &[T], phases: &Phases<T>) -> Sol<T> {
    let mut content = [T::zero(); 2];
    let mut capacity = [T::zero(); 2];
    for e in 0..mesh.n_elements() {
        let region = mesh.regions[e];
        let k = usize::from(region == Region::Shell);
        let ce = mesh.conc_dofs[e].map(|d| c[d]);
        for qp in mesh.element(e).quad_points() {
            content[k] = content[k] + qp.weight * interpolate(&qp.shape, ce);
            capacity[k] = capacity[k] + qp.weight * phases.at(region, radius(qp.x)).c_max;
        }
    }
    let ratio = |a: T, b: T| if b > T::zero() { a / b } else { T::zero() };
    let core = ratio(content[0], capacity[0]);
    let shell = ratio(content[1], capacity[1]);
    Sol {
        total: ratio(content[0] + content[1], capacity[0] + capacity[1]),
        core,
        shell,
        delta: core - shell,
    }
}

/// Fraction of the particle volume where `phi > threshold`, evaluated at
/// quadrature points.
pub fn compute_crack_volume<T: Real>(mesh: &Mesh<T>, phi: &[T], threshold: T) -> T {
    let mut cracked = T::zero();
    let mut total = T::zero();
    for e in 0..mesh.n_elements() {
        let pe = mesh.triangles[e].map(|n| phi[n]);
        for qp in mesh.element(e).quad_points() {
            total = total + qp.weight;
            if interpolate(&qp.shape, pe) > threshold {
                cracked = cracked + qp.weight;
            }
        }
    }
    if total > T::zero() {
        cracked / total
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub stage: Stage,
    pub sol: f64,
    pub sol_core: f64,
    pub sol_shell: f64,
    pub delta_sol: f64,
    pub crack_volume: f64,
    /// Arc of the interface band that is fully cracked (degrees).
    pub debond_arc: f64,
    /// Area-weighted mean inward flux on the outer surface (mol/m^2/s).
    pub surface_flux: f64,
    pub inner_iterations: usize,
}

impl MetricsRow {
    /// One CSV record matching [`MetricsSeries::CSV_HEADER`].
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.9e},{:.6e},{},{:.9},{:.9},{:.9},{:.9},{:.9e},{:.4},{:.9e},{}",
            self.step,
            self.time,
            self.dt,
            self.stage,
            self.sol,
            self.sol_core,
            self.sol_shell,
            self.delta_sol,
            self.crack_volume,
            self.debond_arc,
            self.surface_flux,
            self.inner_iterations
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub rows: Vec<MetricsRow>,
}

impl MetricsSeries {
    pub const CSV_HEADER: &'static str =
        "step,time_s,dt_s,stage,sol,sol_core,sol_shell,delta_sol,crack_volume,debond_arc_deg,surface_flux,inner_iterations";

    pub fn push(&mut self, row: MetricsRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn final_sol(&self) -> Option<f64> {
        self.last().map(|r| r.sol)
    }

    pub fn max_delta_sol(&self) -> f64 {
        self.rows.iter().map(|r| r.delta_sol).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    /// Time of the first row where `pick` exceeds `level`.
    pub fn first_time_above(&self, level: f64, pick: impl Fn(&MetricsRow) -> f64) -> Option<f64> {
        self.rows.iter().find(|r| pick(r) > level).map(|r| r.time)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrackPattern {
    /// Growth of the seeded crack.
    pub propagation: bool,
    /// New crack reaching the outer surface, not connected to the seed.
    pub initiation: bool,
    pub debonding: bool,
    pub branching: bool,
}

impl CrackPattern {
    pub fn is_empty(&self) -> bool {
        !(self.propagation || self.initiation || self.debonding || self.branching)
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let mut p = CrackPattern::default();
        for part in label.split('+').map(str::trim).filter(|s| !s.is_empty() && *s != "none") {
            match part {
                "P" => p.propagation = true,
                "I" => p.initiation = true,
                "DB" => p.debonding = true,
                "B" => p.branching = true,
                _ => return None,
            }
        }
        Some(p)
    }
}

impl fmt::Display for CrackPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [
            (self.propagation, "P"),
            (self.initiation, "I"),
            (self.debonding, "DB"),
            (self.branching, "B"),
        ]
        .into_iter()
        .filter_map(|(on, s)| on.then_some(s))
        .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

/// Thresholds of the pattern classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSettings {
    pub threshold: f64,
    /// Required growth of the seed along its plane, in units of `l`.
    pub extension_factor: f64,
    /// Cap on the required growth as a fraction of the room left between the
    /// seed tip and the opposite boundary of the phase it sits in.
    pub extension_room_fraction: f64,
    /// Minimum arc covered inside the interface band.
    pub debond_arc_degrees: f64,
    pub interface_band_zeta: f64,
    /// Radius of the tip region, in units of `l`.
    pub tip_factor: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        ClassifierSettings {
            threshold: CRACK_THRESHOLD,
            extension_factor: 2.0,
            extension_room_fraction: 0.5,
            debond_arc_degrees: 10.0,
            interface_band_zeta: 0.5,
            tip_factor: 2.0,
        }
    }
}

/// Element neighbours across shared edges.
pub fn element_adjacency<T: Real>(mesh: &Mesh<T>) -> Vec<Vec<usize>> {
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (e, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push(e);
        }
    }
    let mut adj = vec![Vec::new(); mesh.n_elements()];
    for owners in edges.values() {
        for &a in owners {
            for &b in owners {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Connected components of the selected elements.
fn components(adj: &[Vec<usize>], selected: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; selected.len()];
    let mut out = Vec::new();
    for start in 0..selected.len() {
        if !selected[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![start];
        label[start] = id;
        let mut i = 0;
        while i < comp.len() {
            for &nb in &adj[comp[i]] {
                if selected[nb] && label[nb] == usize::MAX {
                    label[nb] = id;
                    comp.push(nb);
                }
            }
            i += 1;
        }
        out.push(comp);
    }
    out
}

/// Polar angle (radians, from the plane `z = 0`) covered by the union of
/// the angular spans of the given elements.
pub fn arc_coverage<T: Real>(mesh: &Mesh<T>, elements: impl Iterator<Item = usize>) -> f64 {
    let mut spans: Vec<(f64, f64)> = elements
        .map(|e| {
            let angles = mesh.triangles[e].map(|n| {
                let p = mesh.nodes[n];
                p[1].as_f64().atan2(p[0].as_f64())
            });
            (
                angles.iter().copied().fold(f64::INFINITY, f64::min),
                angles.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        })
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (lo, hi) in spans {
        cur = match cur {
            Some((a, b)) if lo <= b => Some((a, b.max(hi))),
            Some((a, b)) => {
                covered += b - a;
                Some((lo, hi))
            }
            None => Some((lo, hi)),
        };
    }
    if let Some((a, b)) = cur {
        covered += b - a;
    }
    covered
}

/// Arc (degrees) of the interface band occupied by fully cracked elements,
/// regardless of connectivity. Used to time the onset of debonding.
pub fn debonded_arc_degrees<T: Real>(mesh: &Mesh<T>, phi: &[T], zeta: &[T], settings: &ClassifierSettings) -> f64 {
    let band = (0..mesh.n_elements()).filter(|&e| {
        element_mean(mesh, zeta, e) > settings.interface_band_zeta && element_mean(mesh, phi, e) > settings.threshold
    });
    arc_coverage(mesh, band).to_degrees()
}

fn element_mean<T: Real>(mesh: &Mesh<T>, field: &[T], e: usize) -> f64 {
    let [a, b, c] = mesh.triangles[e];
    (field[a] + field[b] + field[c]).as_f64() / 3.0
}

/// Labels the final damage field against the initial (seeded) one.
///
/// `ell` is the phase-field length scale that sets the propagation and tip
/// distances; `zeta` is the nodal interface indicator.
pub fn classify_pattern<T: Real>(
    mesh: &Mesh<T>,
    phi_initial: &[T],
    phi_final: &[T],
    zeta: &[T],
    ell: f64,
    settings: &ClassifierSettings,
) -> CrackPattern {
    let ne = mesh.n_elements();
    let thr = settings.threshold;
    let seed: Vec<bool> = (0..ne).map(|e| element_mean(mesh, phi_initial, e) > thr).collect();
    let cracked: Vec<bool> = (0..ne).map(|e| element_mean(mesh, phi_final, e) > thr).collect();
    let adj = element_adjacency(mesh);
    let comps = components(&adj, &cracked);
    let centroid: Vec<[f64; 2]> = (0..ne)
        .map(|e| {
            let c = mesh.element(e).centroid();
            [c[0].as_f64(), c[1].as_f64()]
        })
        .collect();
    let rho = |e: usize| (centroid[e][0].powi(2) + centroid[e][1].powi(2)).sqrt();
    let core_r = mesh.core_radius.as_f64();
    let outer_r = mesh.outer_radius.as_f64();
    let on_outer = |e: usize| mesh.triangles[e].iter().any(|&n| mesh.tags[n].outer);
    let mut pattern = CrackPattern::default();

    // debonding: arc coverage of a component inside the interface band
    let arc_limit = settings.debond_arc_degrees.to_radians();
    for comp in &comps {
        let band = comp
            .iter()
            .copied()
            .filter(|&e| element_mean(mesh, zeta, e) > settings.interface_band_zeta);
        if arc_coverage(mesh, band) >= arc_limit {
            pattern.debonding = true;
        }
    }

    // initiation: surface-breaking component disjoint from the seed
    for comp in &comps {
        if comp.iter().any(|&e| on_outer(e)) && !comp.iter().any(|&e| seed[e]) {
            pattern.initiation = true;
        }
    }

    let seed_elems: Vec<usize> = (0..ne).filter(|&e| seed[e]).collect();
    if seed_elems.is_empty() {
        return pattern;
    }
    // growth of the seed along the plane z = 0: radial reach of cracked
    // elements near the plane in the component(s) holding the seed
    let slab = settings.extension_factor * ell;
    let seed_lo = seed_elems.iter().map(|&e| rho(e)).fold(f64::INFINITY, f64::min);
    let seed_hi = seed_elems.iter().map(|&e| rho(e)).fold(f64::NEG_INFINITY, f64::max);
    let seeded: Vec<&Vec<usize>> = comps.iter().filter(|c| c.iter().any(|&e| seed[e])).collect();
    let near_plane: Vec<usize> = seeded
        .iter()
        .flat_map(|c| c.iter().copied())
        .filter(|&e| centroid[e][1] <= slab)
        .collect();
    let reach_lo = near_plane.iter().map(|&e| rho(e)).fold(seed_lo, f64::min);
    let reach_hi = near_plane.iter().map(|&e| rho(e)).fold(seed_hi, f64::max);
    // room toward the next phase boundary in each growth direction
    let (room_in, room_out) = if seed_lo > core_r {
        (seed_lo - core_r, outer_r - seed_hi)
    } else if seed_hi < core_r {
        (seed_lo, core_r - seed_hi)
    } else {
        (seed_lo, outer_r - seed_hi)
    };
    let need = |room: f64| (settings.extension_factor * ell).min(settings.extension_room_fraction * room);
    let grew_in = room_in > 0.0 && seed_lo - reach_lo >= need(room_in);
    let grew_out = room_out > 0.0 && reach_hi - seed_hi >= need(room_out);
    pattern.propagation = grew_in || grew_out;

    // branching: at least two separate cracked paths leaving the tip region
    // seed ends away from the axis and the outer surface
    let mut tips = Vec::new();
    if seed_lo > ell {
        tips.push([seed_lo, 0.0]);
    }
    if seed_hi < outer_r - ell {
        tips.push([seed_hi, 0.0]);
    }
    let tip_radius = settings.tip_factor * ell;
    for tip in tips {
        let dist = |e: usize| ((centroid[e][0] - tip[0]).powi(2) + (centroid[e][1] - tip[1]).powi(2)).sqrt();
        let in_tip: Vec<bool> = (0..ne).map(|e| cracked[e] && dist(e) <= tip_radius).collect();
        if !in_tip.iter().any(|&b| b) {
            continue;
        }
        let rest: Vec<bool> = (0..ne).map(|e| cracked[e] && !seed[e] && !in_tip[e]).collect();
        let branches = components(&adj, &rest)
            .into_iter()
            .filter(|c| c.iter().any(|&e| adj[e].iter().any(|&nb| in_tip[nb])))
            .filter(|c| c.iter().map(|&e| dist(e)).fold(0.0, f64::max) >= 2.0 * tip_radius)
            .count();
        if branches >= 2 {
            pattern.branching = true;
        }
    }
    pattern
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Material;
    use crate::mesh::{build_particle_mesh, Grading, MeshResolution, ParticleSpec};

    fn setup() -> (Mesh<f64>, Phases<f64>) {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let res = MeshResolution::from_length_scales(0.5e-6, 0.25e-6, 0.8e-6);
        let mesh = build_particle_mesh(&spec, &res).unwrap();
        let ph = Phases::new(Material::nmc811(), Material::nmc532(), Grading::UniformShell, 4e-6, 4.8e-6);
        (mesh, ph)
    }

    #[test]
    fn sol_limits_and_core_only() {
        let (mesh, ph) = setup();
        let full: Vec<f64> = (0..mesh.n_conc_dofs)
            .map(|d| ph.at(mesh.conc_dof_region[d], 0.0).c_max)
            .collect();
        let s = compute_sol(&mesh, &full, &ph);
        assert!((s.total - 1.0).abs() < 1e-12 && s.delta.abs() < 1e-12);
        let s = compute_sol(&mesh, &vec![0.0; mesh.n_conc_dofs], &ph);
        assert_eq!(s.total, 0.0);
        let core_only: Vec<f64> = (0..mesh.n_conc_dofs)
            .map(|d| if mesh.conc_dof_region[d] == Region::Core { full[d] } else { 0.0 })
            .collect();
        let s = compute_sol(&mesh, &core_only, &ph);
        let (v1, v2) = (mesh.volume(Some(Region::Core)), mesh.volume(Some(Region::Shell)));
        let (c1, c2) = (ph.core.props.c_max, ph.shell.props.c_max);
        assert!((s.total - v1 * c1 / (v1 * c1 + v2 * c2)).abs() < 1e-12);
        assert!((s.delta - 1.0).abs() < 1e-12);
        // same ratio for the exact sphere volumes
        let (s1, s2) = ParticleSpec::from_relative(4e-6, 0.2).sphere_volumes();
        let exact = s1 * c1 / (s1 * c1 + s2 * c2);
        assert!((s.total - exact).abs() < 2e-3, "{} vs {exact}", s.total);
    }

    #[test]
    fn crack_volume_limits() {
        let (mesh, _) = setup();
        let n = mesh.n_nodes();
        assert_eq!(compute_crack_volume(&mesh, &vec![0.96; n], 0.95), 1.0);
        assert_eq!(compute_crack_volume(&mesh, &vec![0.9; n], 0.95), 0.0);
    }

    #[test]
    fn labels_round_trip() {
        for label in ["P", "P+I", "P+DB", "DB", "P+I+DB", "P+B", "none"] {
            assert_eq!(CrackPattern::from_label(label).unwrap().to_string(), label);
        }
        assert!(CrackPattern::from_label("X").is_none());
    }
}
