//! Diffuse core-shell interface: indicator field, toughness blending and
//! graded-shell interpolation.

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_screened, scalar_pattern, ScreenedCoefficients};
use crate::fem::{solve_spd, DirichletSet, ScalarField, SolverOptions};
use crate::material::Phases;
use crate::mesh::{radius, Mesh, Region};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceParams<T> {
    /// Width of the diffuse interface (m).
    pub l_zeta: T,
    /// Interfacial toughness `G_c,I` (N/m).
    pub g_c_interface: T,
}

impl<T: Real> InterfaceParams<T> {
    /// Interfacial toughness as a fraction of the average bulk toughness.
    pub fn from_bonding_ratio(l_zeta: T, ratio: T, phases: &Phases<T>) -> Self {
        InterfaceParams {
            l_zeta,
            g_c_interface: ratio * phases.g_c_average(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_zeta > T::zero()) {
            return Err(Error::Parameter("l_zeta must be positive".into()));
        }
        if !(self.g_c_interface > T::zero()) {
            return Err(Error::Parameter("interfacial toughness must be positive".into()));
        }
        Ok(())
    }
}

/// Solves `zeta - l^2 lap(zeta) = 0` with `zeta = 1` on the interface and
/// natural (zero-flux) conditions on every other boundary.
pub fn solve_interface_indicator<T: Real>(mesh: &Mesh<T>, l_zeta: T, opts: &SolverOptions<T>) -> Result<ScalarField<T>> {
    if mesh.interface_pairs.is_empty() {
        return Err(Error::Geometry("mesh has no tagged interface".into()));
    }
    if !(l_zeta > T::zero()) {
        return Err(Error::Parameter("l_zeta must be positive".into()));
    }
    let pattern = scalar_pattern(mesh.n_nodes(), &mesh.triangles);
    let l2 = l_zeta * l_zeta;
    let mut system = assemble_screened(mesh, &mesh.triangles, &pattern, false, |_, _, _| ScreenedCoefficients {
        reaction: T::one(),
        diffusion: l2,
        source: T::zero(),
    });
    let mut bc = DirichletSet::new();
    for node in mesh.interface_nodes() {
        bc.insert(node, T::one());
    }
    system.constraints = bc;
    let (zeta, _) = solve_spd(&system, opts, None)?;
    // P1 undershoot on coarse grading can dip a hair below zero
    Ok(ScalarField(zeta.into_iter().map(|z| z.max(T::zero()).min(T::one())).collect()))
}

/// `(1 - zeta)^2 (G_bulk - G_I) + G_I`.
pub fn blend_toughness<T: Real>(zeta: T, g_bulk: T, g_interface: T) -> T {
    // written as a convex combination so both endpoints are exact
    let w = (T::one() - zeta).powi(2);
    w * g_bulk + (T::one() - w) * g_interface
}

/// Nodal toughness with the bulk branch chosen by the node's region.
pub fn build_toughness_field<T: Real>(
    mesh: &Mesh<T>,
    zeta: &ScalarField<T>,
    phases: &Phases<T>,
    g_c_interface: T,
) -> ScalarField<T> {
    let values = (0..mesh.n_nodes())
        .map(|n| {
            let region = if mesh.tags[n].interface {
                Region::Shell
            } else {
                mesh.conc_dof_region[n]
            };
            let bulk = phases.at(region, radius(mesh.nodes[n])).g_c;
            blend_toughness(zeta[n], bulk, g_c_interface)
        })
        .collect();
    ScalarField(values)
}

/// Linear interpolation across the shell from `prop_core` at `r = R` to
/// `prop_surface` at `r = R + h`.
pub fn graded_shell_property<T: Real>(r: T, prop_core: T, prop_surface: T, core_radius: T, thickness: T) -> Result<T> {
    let tol = T::lit(1e-12) * (core_radius + thickness);
    if r < core_radius - tol || r > core_radius + thickness + tol {
        return Err(Error::Parameter(format!(
            "radius {r} outside the shell [{core_radius}, {}]",
            core_radius + thickness
        )));
    }
    let s = ((r - core_radius) / thickness).max(T::zero()).min(T::one());
    Ok(prop_core + s * (prop_surface - prop_core))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Material;
    use crate::mesh::{build_particle_mesh, Grading, MeshResolution, ParticleSpec};

    fn reference_phases() -> Phases<f64> {
        Phases::new(Material::nmc811(), Material::nmc532(), Grading::UniformShell, 4e-6, 4.8e-6)
    }

    #[test]
    fn toughness_blend_values() {
        assert_eq!(blend_toughness(1.0, 0.408, 0.12), 0.12);
        assert_eq!(blend_toughness(0.0, 0.408, 0.3535), 0.408);
        // 0.25 * (0.408 - 0.3535) + 0.3535
        assert!((blend_toughness(0.5_f64, 0.408, 0.3535) - 0.367125).abs() < 1e-12);
    }

    #[test]
    fn graded_property_endpoints_and_midpoint() {
        let (r, h) = (4e-6, 0.8e-6);
        assert_eq!(graded_shell_property(r, 230e9, 201e9, r, h).unwrap(), 230e9);
        assert!((graded_shell_property::<f64>(r + h, 230e9, 201e9, r, h).unwrap() - 201e9).abs() < 1e-3);
        assert!((graded_shell_property::<f64>(r + h / 2.0, 230e9, 201e9, r, h).unwrap() - 215.5e9).abs() < 1e-3);
        assert!(graded_shell_property(3e-6, 1.0, 2.0, r, h).is_err());
    }

    #[test]
    fn indicator_on_particle_obeys_bounds() {
        let spec = ParticleSpec::from_relative(4e-6, 0.2);
        let res = MeshResolution::from_length_scales(0.8e-6, 0.1e-6, 0.6e-6);
        let mesh = build_particle_mesh(&spec, &res).unwrap();
        let opts = SolverOptions { tol: 1e-12, ..Default::default() };
        let zeta = solve_interface_indicator(&mesh, 1e-7, &opts).unwrap();
        assert!(zeta.min() >= -1e-6 && zeta.max() <= 1.0 + 1e-6);
        for n in mesh.interface_nodes() {
            assert_eq!(zeta[n], 1.0);
        }
        for (n, p) in mesh.nodes.iter().enumerate() {
            if (radius::<f64>(*p) - 4e-6).abs() >= 1e-6 {
                assert!(zeta[n] < 1e-4, "zeta = {} at distance {}", zeta[n], (radius::<f64>(*p) - 4e-6).abs());
            }
        }
        let phases = reference_phases();
        for ratio in [0.1, 0.5, 1.0] {
            let gi = ratio * phases.g_c_average();
            let gc = build_toughness_field(&mesh, &zeta, &phases, gi);
            let lo = gi.min(0.299);
            let hi = gi.max(0.408);
            assert!(gc.iter().all(|&g| g >= lo - 1e-12 && g <= hi + 1e-12));
        }
    }

    #[test]
    fn missing_interface_rejected() {
        let mut mesh = Mesh::<f64>::planar_strip(1.0, 0.1, 4, 1).unwrap();
        mesh.interface_pairs.clear();
        assert!(matches!(
            solve_interface_indicator(&mesh, 0.1, &SolverOptions::default()),
            Err(Error::Geometry(_))
        ));
    }
}
