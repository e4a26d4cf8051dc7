//! Interface-conforming triangulations of the particle cross-section.
//!
//! The particle is modelled as a quarter of its meridional cross-section
//! (`r >= 0`, `z >= 0`) rotated about the `z` axis. Nodes are laid out on
//! concentric quarter-circle rings, one of which sits exactly on the
//! core-shell interface, so no element ever crosses it. Neighbouring rings
//! are stitched together with a zipper triangulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::element::Triangle;
use crate::real::Real;

/// Core or shell phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Core,
    Shell,
}

/// Measure used for integrals over the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Volume of revolution about `r = 0`: `dV = 2 pi r dA`.
    Axisymmetric,
    /// Unit-thickness plane: `dV = dA`.
    Planar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    #[default]
    UniformShell,
    /// Shell properties vary linearly from the core material at `r = R`
    /// to the shell material at the outer surface.
    LinearGradedShell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrackLocation {
    Surface,
    Interface,
    Center,
    #[default]
    None,
}

/// Pre-existing crack lying on the equatorial plane `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCrack<T> {
    pub location: CrackLocation,
    /// Crack length `a` (m).
    pub size: T,
}

impl<T: Real> InitialCrack<T> {
    pub fn none() -> Self {
        InitialCrack {
            location: CrackLocation::None,
            size: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec<T> {
    /// Core radius `R` (m).
    pub core_radius: T,
    /// Shell thickness `h` (m).
    pub shell_thickness: T,
    pub grading: Grading,
    pub crack: InitialCrack<T>,
}

impl<T: Real> ParticleSpec<T> {
    /// Builds a spec from the core radius and relative shell thickness `h / R`.
    pub fn from_relative(core_radius: T, hbar: T) -> Self {
        ParticleSpec {
            core_radius,
            shell_thickness: hbar * core_radius,
            grading: Grading::UniformShell,
            crack: InitialCrack::none(),
        }
    }

    pub fn with_crack(mut self, location: CrackLocation, size: T) -> Self {
        self.crack = InitialCrack { location, size };
        self
    }

    pub fn outer_radius(&self) -> T {
        self.core_radius + self.shell_thickness
    }

    pub fn hbar(&self) -> T {
        self.shell_thickness / self.core_radius
    }

    /// Analytic core and shell volumes of the full sphere.
    pub fn sphere_volumes(&self) -> (T, T) {
        let k = T::lit(4.0 / 3.0) * T::PI();
        let r3 = self.core_radius.powi(3);
        (k * r3, k * (self.outer_radius().powi(3) - r3))
    }

    pub fn sphere_surface_area(&self) -> T {
        T::lit(4.0) * T::PI() * self.outer_radius().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        let (r, h) = (self.core_radius, self.shell_thickness);
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::Geometry(format!("core radius must be positive, got {r}")));
        }
        if !(h > T::zero()) {
            return Err(Error::Geometry(format!("shell thickness must be positive, got {h}")));
        }
        if h >= r {
            return Err(Error::Geometry(format!(
                "shell thickness {h} must be smaller than the core radius {r}"
            )));
        }
        let hbar = self.hbar();
        if hbar < T::lit(0.1 - 1e-9) || hbar > T::lit(0.3 + 1e-9) {
            log::info!("relative shell thickness {hbar} lies outside the studied range [0.1, 0.3]");
        }
        let a = self.crack.size;
        match self.crack.location {
            CrackLocation::None => {}
            CrackLocation::Surface | CrackLocation::Interface => {
                if !(a > T::zero()) || a >= h {
                    return Err(Error::Geometry(format!(
                        "shell crack size must satisfy 0 < a < h = {h}, got {a}"
                    )));
                }
            }
            CrackLocation::Center => {
                if !(a > T::zero()) || a >= r {
                    return Err(Error::Geometry(format!(
                        "central crack size must satisfy 0 < a < R = {r}, got {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Radial extent of the seeded crack on the plane `z = 0`.
    pub fn crack_band(&self) -> Option<CrackBand<T>> {
        let a = self.crack.size;
        let (r, b) = (self.core_radius, self.outer_radius());
        let two = T::lit(2.0);
        match self.crack.location {
            CrackLocation::None => None,
            CrackLocation::Surface => Some(CrackBand {
                r_start: b - a,
                r_end: b,
            }),
            CrackLocation::Interface => Some(CrackBand {
                r_start: r - a / two,
                r_end: r + a / two,
            }),
            CrackLocation::Center => Some(CrackBand {
                r_start: T::zero(),
                r_end: a,
            }),
        }
    }
}

/// Radial segment `[r_start, r_end]` of the plane `z = 0` holding the initial crack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackBand<T> {
    pub r_start: T,
    pub r_end: T,
}

impl<T: Real> CrackBand<T> {
    pub fn contains_radius(&self, r: T) -> bool {
        r >= self.r_start && r <= self.r_end
    }

    pub fn straddles(&self, r: T) -> bool {
        self.r_start < r && self.r_end > r
    }
}

/// Target element sizes (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshResolution<T> {
    /// Size away from any refinement band.
    pub bulk: T,
    /// Size inside the diffuse interface band.
    pub interface_band: T,
    /// Size in regions that may crack: the shell and the seeded band.
    pub crack_band: T,
    /// Half-width of the interface band around `r = R`.
    pub interface_halfwidth: T,
    /// Growth of the element size per unit distance from a band.
    pub grading: T,
}

impl<T: Real> MeshResolution<T> {
    /// Resolution satisfying `interface <= l_zeta / 3` and `crack <= l_min / 4`.
    pub fn from_length_scales(l_min: T, l_zeta: T, bulk: T) -> Self {
        MeshResolution {
            bulk,
            interface_band: l_zeta / T::lit(3.0),
            crack_band: l_min / T::lit(4.0),
            interface_halfwidth: T::lit(5.0) * l_zeta,
            grading: T::lit(0.3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bulk", self.bulk),
            ("interface_band", self.interface_band),
            ("crack_band", self.crack_band),
        ] {
            if !(v > T::zero()) {
                return Err(Error::Geometry(format!("mesh size `{name}` must be positive")));
            }
        }
        if self.interface_halfwidth < T::zero() || self.grading < T::zero() {
            return Err(Error::Geometry("negative interface half-width or grading".into()));
        }
        Ok(())
    }

    fn size_at(&self, rho: T, core_radius: T, outer_radius: T, crack: Option<CrackBand<T>>) -> T {
        let dist = |a: T, b: T| {
            if rho < a {
                a - rho
            } else if rho > b {
                rho - b
            } else {
                T::zero()
            }
        };
        let g = self.grading;
        let mut s = self.bulk;
        s = s.min(self.crack_band + g * dist(core_radius, outer_radius));
        s = s.min(
            self.interface_band
                + g * dist(core_radius - self.interface_halfwidth, core_radius + self.interface_halfwidth),
        );
        if let Some(band) = crack {
            s = s.min(self.crack_band + g * dist(band.r_start, band.r_end));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeTags {
    /// Outer particle surface.
    pub outer: bool,
    /// Symmetry axis `r = 0`.
    pub axis: bool,
    /// Symmetry plane `z = 0`.
    pub plane: bool,
    /// Core-shell interface.
    pub interface: bool,
}

/// Core-side and shell-side concentration dofs of one interface node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfacePair {
    pub node: usize,
    pub core_dof: usize,
    pub shell_dof: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub geometry: Geometry,
    /// Node coordinates `(r, z)`.
    pub nodes: Vec<[T; 2]>,
    /// Counter-clockwise linear triangles.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub tags: Vec<NodeTags>,
    /// Boundary edges on the outer surface.
    pub outer_edges: Vec<[usize; 2]>,
    /// Concentration dofs per triangle (interface nodes are duplicated).
    pub conc_dofs: Vec<[usize; 3]>,
    pub n_conc_dofs: usize,
    pub interface_pairs: Vec<InterfacePair>,
    /// Node owning each concentration dof.
    pub conc_dof_node: Vec<usize>,
    /// Region owning each concentration dof (non-interface dofs follow their elements).
    pub conc_dof_region: Vec<Region>,
    pub core_radius: T,
    pub outer_radius: T,
    pub crack_band: Option<CrackBand<T>>,
}

impl<T: Real> Mesh<T> {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn element(&self, e: usize) -> Triangle<T> {
        let [a, b, c] = self.triangles[e];
        Triangle::new([self.nodes[a], self.nodes[b], self.nodes[c]], self.geometry)
    }

    /// Integral of `dV` over the elements of one region (or all, with `None`).
    pub fn volume(&self, region: Option<Region>) -> T {
        (0..self.n_elements())
            .filter(|&e| region.map_or(true, |r| self.regions[e] == r))
            .map(|e| self.element(e).volume())
            .sum()
    }

    /// Area of the outer boundary in the mesh measure.
    pub fn outer_area(&self) -> T {
        self.outer_edges
            .iter()
            .map(|&[a, b]| edge_measure(self.nodes[a], self.nodes[b], self.geometry))
            .sum()
    }

    pub fn interface_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.interface_pairs.iter().map(|p| p.node)
    }

    /// Whether a node lies on the seeded crack segment of the plane `z = 0`.
    pub fn in_crack_band(&self, node: usize) -> bool {
        let [r, z] = self.nodes[node];
        self.crack_band
            .is_some_and(|b| z.abs() <= T::lit(1e-12) * self.outer_radius && b.contains_radius(r))
    }

    /// Smallest edge length among elements with any node inside `rho in [lo, hi]`.
    pub fn max_edge_in_shell(&self, lo: T, hi: T) -> T {
        let mut m = T::zero();
        for tri in &self.triangles {
            let inside = tri.iter().any(|&n| {
                let rho = radius(self.nodes[n]);
                rho >= lo && rho <= hi
            });
            if !inside {
                continue;
            }
            for k in 0..3 {
                let (p, q) = (self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]);
                m = m.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        m
    }

    /// Concentration dof of `node` seen from `region`.
    pub fn conc_dof(&self, node: usize, region: Region) -> usize {
        match self.interface_pairs.binary_search_by_key(&node, |p| p.node) {
            Ok(i) => match region {
                Region::Core => self.interface_pairs[i].core_dof,
                Region::Shell => self.interface_pairs[i].shell_dof,
            },
            Err(_) => self.node_dof_base(node),
        }
    }

    fn node_dof_base(&self, node: usize) -> usize {
        // base dofs are numbered identically to nodes
        node
    }

    /// Rectangular bimaterial strip `[-half_length, half_length] x [0, height]`
    /// in plane geometry with the interface at `x = 0` (core on the left).
    /// Used by verification problems with one-dimensional solutions.
    pub fn planar_strip(half_length: T, height: T, nx_half: usize, ny: usize) -> Result<Self> {
        if nx_half == 0 || ny == 0 || !(half_length > T::zero()) || !(height > T::zero()) {
            return Err(Error::Geometry("strip needs positive size and resolution".into()));
        }
        let nx = 2 * nx_half;
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut tags = Vec::with_capacity(nodes.capacity());
        for j in 0..=ny {
            for i in 0..=nx {
                let x = -half_length
                    + T::lit(2.0) * half_length * T::from_usize_lossy(i) / T::from_usize_lossy(nx);
                let y = height * T::from_usize_lossy(j) / T::from_usize_lossy(ny);
                nodes.push([if i == nx_half { T::zero() } else { x }, y]);
                tags.push(NodeTags {
                    outer: i == 0 || i == nx,
                    interface: i == nx_half,
                    ..Default::default()
                });
            }
        }
        let mut triangles = Vec::new();
        let mut regions = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let region = if i < nx_half { Region::Core } else { Region::Shell };
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
                regions.push(region);
                regions.push(region);
            }
        }
        let mut outer_edges = Vec::new();
        for j in 0..ny {
            outer_edges.push([idx(0, j + 1), idx(0, j)]);
            outer_edges.push([idx(nx, j), idx(nx, j + 1)]);
        }
        Ok(finish_mesh(
            Geometry::Planar,
            nodes,
            triangles,
            regions,
            tags,
            outer_edges,
            T::zero(),
            half_length,
            None,
        ))
    }
}

pub(crate) fn radius<T: Real>(p: [T; 2]) -> T {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

pub(crate) fn edge_measure<T: Real>(p: [T; 2], q: [T; 2], geometry: Geometry) -> T {
    let len = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    match geometry {
        Geometry::Planar => len,
        Geometry::Axisymmetric => T::lit(2.0) * T::PI() * T::lit(0.5) * (p[0] + q[0]) * len,
    }
}

/// Radial node positions on `[a, b]` following the size function, hitting both ends.
fn radial_positions<T: Real>(a: T, b: T, size: impl Fn(T) -> T) -> Vec<T> {
    const SAMPLES: usize = 4000;
    let ds = (b - a) / T::from_usize_lossy(SAMPLES);
    let mut cumulative = Vec::with_capacity(SAMPLES + 1);
    cumulative.push(T::zero());
    for k in 0..SAMPLES {
        let mid = a + ds * (T::from_usize_lossy(k) + T::lit(0.5));
        let last = *cumulative.last().unwrap();
        cumulative.push(last + ds / size(mid));
    }
    let total = *cumulative.last().unwrap();
    let n = total.ceil().to_usize().unwrap_or(1).max(1);
    let mut out = Vec::with_capacity(n + 1);
    out.push(a);
    let mut k = 0;
    for i in 1..n {
        let target = total * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        while cumulative[k + 1] < target {
            k += 1;
        }
        let f = (target - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
        out.push(a + ds * (T::from_usize_lossy(k) + f));
    }
    out.push(b);
    out
}

/// Generates the quarter cross-section mesh of a core-shell particle.
pub fn build_particle_mesh<T: Real>(spec: &ParticleSpec<T>, res: &MeshResolution<T>) -> Result<Mesh<T>> {
    spec.validate()?;
    res.validate()?;
    let (core_r, outer_r) = (spec.core_radius, spec.outer_radius());
    let band = spec.crack_band();
    let size = |rho: T| res.size_at(rho, core_r, outer_r, band);

    let mut rhos = radial_positions(T::zero(), core_r, size);
    let interface_ring = rhos.len() - 1;
    let shell = radial_positions(core_r, outer_r, size);
    rhos.extend_from_slice(&shell[1..]);

    let half_pi = T::FRAC_PI_2();
    let mut nodes = vec![[T::zero(), T::zero()]];
    let mut tags = vec![NodeTags {
        axis: true,
        plane: true,
        ..Default::default()
    }];
    // ring node index lists, ring 0 is the centre
    let mut rings: Vec<Vec<usize>> = vec![vec![0]];
    let mut ring_angles: Vec<Vec<T>> = vec![vec![T::zero()]];
    let last = rhos.len() - 1;
    for (k, &rho) in rhos.iter().enumerate().skip(1) {
        let m = (half_pi * rho / size(rho)).ceil().to_usize().unwrap_or(1).max(1);
        let mut ids = Vec::with_capacity(m + 1);
        let mut angles = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let theta = half_pi * T::from_usize_lossy(j) / T::from_usize_lossy(m);
            let p = if j == 0 {
                [rho, T::zero()]
            } else if j == m {
                [T::zero(), rho]
            } else {
                [rho * theta.cos(), rho * theta.sin()]
            };
            ids.push(nodes.len());
            angles.push(theta);
            nodes.push(p);
            tags.push(NodeTags {
                outer: k == last,
                axis: j == m,
                plane: j == 0,
                interface: k == interface_ring,
            });
        }
        rings.push(ids);
        ring_angles.push(angles);
    }

    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for k in 0..last {
        let region = if k < interface_ring { Region::Core } else { Region::Shell };
        let (inner, outer) = (&rings[k], &rings[k + 1]);
        let (ta, tb) = (&ring_angles[k], &ring_angles[k + 1]);
        if inner.len() == 1 {
            for j in 0..outer.len() - 1 {
                triangles.push([inner[0], outer[j], outer[j + 1]]);
                regions.push(region);
            }
            continue;
        }
        let (ma, mb) = (inner.len() - 1, outer.len() - 1);
        let (mut i, mut j) = (0, 0);
        while i < ma || j < mb {
            let advance_outer = if i == ma {
                true
            } else if j == mb {
                false
            } else {
                // advance along the ring whose next segment midpoint comes first
                (tb[j] + tb[j + 1]) <= (ta[i] + ta[i + 1])
            };
            if advance_outer {
                triangles.push([inner[i], outer[j], outer[j + 1]]);
                j += 1;
            } else {
                triangles.push([inner[i], outer[j], inner[i + 1]]);
                i += 1;
            }
            regions.push(region);
        }
    }
    for tri in &mut triangles {
        let [a, b, c] = *tri;
        if signed_area(nodes[a], nodes[b], nodes[c]) < T::zero() {
            tri.swap(1, 2);
        }
    }

    let outer_ring = &rings[last];
    let outer_edges = outer_ring.windows(2).map(|w| [w[0], w[1]]).collect();

    Ok(finish_mesh(
        Geometry::Axisymmetric,
        nodes,
        triangles,
        regions,
        tags,
        outer_edges,
        core_r,
        outer_r,
        band,
    ))
}

pub(crate) fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    T::lit(0.5) * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[allow(clippy::too_many_arguments)]
fn finish_mesh<T: Real>(
    geometry: Geometry,
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    tags: Vec<NodeTags>,
    outer_edges: Vec<[usize; 2]>,
    core_radius: T,
    outer_radius: T,
    crack_band: Option<CrackBand<T>>,
) -> Mesh<T> {
    let n = nodes.len();
    let mut interface_pairs = Vec::new();
    let mut conc_dof_node: Vec<usize> = (0..n).collect();
    let mut conc_dof_region = vec![Region::Core; n];
    for (node, t) in tags.iter().enumerate() {
        if t.interface {
            interface_pairs.push(InterfacePair {
                node,
                core_dof: node,
                shell_dof: n + interface_pairs.len(),
            });
            conc_dof_node.push(node);
            conc_dof_region.push(Region::Shell);
        }
    }
    let shell_twin = |node: usize| {
        interface_pairs
            .binary_search_by_key(&node, |p| p.node)
            .ok()
            .map(|i| interface_pairs[i].shell_dof)
    };
    let mut conc_dofs = Vec::with_capacity(triangles.len());
    for (tri, &region) in triangles.iter().zip(&regions) {
        let mut d = *tri;
        for (slot, &node) in d.iter_mut().zip(tri) {
            if region == Region::Shell {
                if let Some(twin) = shell_twin(node) {
                    *slot = twin;
                    continue;
                }
                conc_dof_region[node] = Region::Shell;
            }
        }
        conc_dofs.push(d);
    }
    let n_conc_dofs = conc_dof_node.len();
    Mesh {
        geometry,
        nodes,
        triangles,
        regions,
        tags,
        outer_edges,
        conc_dofs,
        n_conc_dofs,
        interface_pairs,
        conc_dof_node,
        conc_dof_region,
        core_radius,
        outer_radius,
        crack_band,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> MeshResolution<f64> {
        MeshResolution {
            bulk: 0.5e-6,
            interface_band: 0.1e-6,
            crack_band: 0.15e-6,
            interface_halfwidth: 0.3e-6,
            grading: 0.3,
        }
    }

    #[test]
    fn reference_geometry_bookkeeping() {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let mesh = build_particle_mesh(&spec, &coarse()).unwrap();
        assert!((mesh.outer_radius - 4.8e-6).abs() < 1e-18);
        assert!(mesh.regions.contains(&Region::Core));
        assert!(mesh.regions.contains(&Region::Shell));
        assert!(!mesh.interface_pairs.is_empty());
        for p in &mesh.interface_pairs {
            assert_ne!(p.core_dof, p.shell_dof);
            let rho = radius(mesh.nodes[p.node]);
            assert!((rho - 4e-6).abs() < 1e-12 * 4e-6);
        }
    }

    #[test]
    fn elements_positive_and_single_region() {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let mesh = build_particle_mesh(&spec, &coarse()).unwrap();
        let r = mesh.core_radius;
        for (tri, &region) in mesh.triangles.iter().zip(&mesh.regions) {
            let [a, b, c] = *tri;
            assert!(signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) > 0.0);
            for &n in tri {
                let rho = radius(mesh.nodes[n]);
                match region {
                    Region::Core => assert!(rho <= r * (1.0 + 1e-12)),
                    Region::Shell => assert!(rho >= r * (1.0 - 1e-12)),
                }
            }
        }
    }

    #[test]
    fn only_concentration_is_duplicated() {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let mesh = build_particle_mesh(&spec, &coarse()).unwrap();
        assert_eq!(mesh.n_conc_dofs, mesh.n_nodes() + mesh.interface_pairs.len());
        for (e, tri) in mesh.triangles.iter().enumerate() {
            for (k, &n) in tri.iter().enumerate() {
                let d = mesh.conc_dofs[e][k];
                assert_eq!(mesh.conc_dof_node[d], n);
                assert_eq!(mesh.conc_dof(n, mesh.regions[e]), d);
            }
        }
    }

    #[test]
    fn interface_crack_band_straddles_interface() {
        let spec = ParticleSpec::from_relative(4e-6, 0.2).with_crack(CrackLocation::Interface, 0.6 * 0.8e-6);
        let mesh = build_particle_mesh(&spec, &coarse()).unwrap();
        let band = mesh.crack_band.unwrap();
        assert!(band.straddles(4e-6));
        let on_plane: Vec<_> = (0..mesh.n_nodes()).filter(|&n| mesh.in_crack_band(n)).collect();
        assert!(on_plane.iter().any(|&n| mesh.nodes[n][0] < 4e-6));
        assert!(on_plane.iter().any(|&n| mesh.nodes[n][0] > 4e-6));
        assert!(on_plane.iter().all(|&n| mesh.nodes[n][1] == 0.0));
    }

    #[test]
    fn degenerate_specs_rejected() {
        let mut spec = ParticleSpec::from_relative(4e-6, 0.2);
        spec.shell_thickness = 0.0;
        assert!(build_particle_mesh(&spec, &coarse()).is_err());
        let spec = ParticleSpec::from_relative(4e-6, 0.2).with_crack(CrackLocation::Surface, 0.8e-6);
        assert!(matches!(build_particle_mesh(&spec, &coarse()), Err(Error::Geometry(_))));
        let spec = ParticleSpec::from_relative(4e-6, 0.2).with_crack(CrackLocation::Center, 4e-6);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn band_sizes_respect_targets() {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let res = MeshResolution::from_length_scales(0.23e-6, 0.1e-6, 0.4e-6);
        let mesh = build_particle_mesh(&spec, &res).unwrap();
        // unstructured rings stretch edges slightly beyond the target; allow the
        // diagonal factor of a right triangle
        let iface = mesh.max_edge_in_shell(4e-6 - 0.2e-6, 4e-6 + 0.2e-6);
        assert!(iface <= res.interface_band * 1.5, "{iface}");
        let shell = mesh.max_edge_in_shell(4.3e-6, 4.8e-6);
        assert!(shell <= res.crack_band * 1.5, "{shell}");
    }
}
