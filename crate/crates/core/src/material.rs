//! Per-phase material constants.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interface::graded_shell_property;
use crate::mesh::{Grading, Region};
use crate::ocp::OcpCurve;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    /// J/(mol K)
    pub gas_constant: T,
    /// C/mol
    pub faraday: T,
    /// K
    pub temperature: T,
}

impl<T: Real> Default for PhysicalConstants<T> {
    fn default() -> Self {
        PhysicalConstants {
            gas_constant: T::lit(8.314),
            faraday: T::lit(96485.0),
            temperature: T::lit(298.15),
        }
    }
}

impl<T: Real> PhysicalConstants<T> {
    pub fn rt(&self) -> T {
        self.gas_constant * self.temperature
    }
}

/// Scalar properties at one point of the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPoint<T> {
    /// mol/m^3
    pub c_max: T,
    /// Partial molar volume (m^3/mol).
    pub omega: T,
    /// Undamaged diffusivity (m^2/s).
    pub d0: T,
    /// Young's modulus (Pa).
    pub youngs: T,
    pub poisson: T,
    /// Toughness (N/m).
    pub g_c: T,
    /// Phase-field length scale (m).
    pub ell: T,
}

impl<T: Real> MaterialPoint<T> {
    pub fn lame_lambda(&self) -> T {
        let (e, nu) = (self.youngs, self.poisson);
        e * nu / ((T::one() + nu) * (T::one() - T::lit(2.0) * nu))
    }

    pub fn shear_modulus(&self) -> T {
        self.youngs / (T::lit(2.0) * (T::one() + self.poisson))
    }

    pub fn bulk_modulus(&self) -> T {
        self.lame_lambda() + T::lit(2.0 / 3.0) * self.shear_modulus()
    }

    fn lerp(a: &Self, b: &Self, r: T, r0: T, r1: T) -> Result<Self> {
        let h = r1 - r0;
        let f = |p: T, q: T| graded_shell_property(r, p, q, r0, h);
        Ok(MaterialPoint {
            c_max: f(a.c_max, b.c_max)?,
            omega: f(a.omega, b.omega)?,
            d0: f(a.d0, b.d0)?,
            youngs: f(a.youngs, b.youngs)?,
            poisson: f(a.poisson, b.poisson)?,
            g_c: f(a.g_c, b.g_c)?,
            ell: f(a.ell, b.ell)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Material<T> {
    pub props: MaterialPoint<T>,
    pub ocp: Arc<OcpCurve<T>>,
}

impl<T: Real> Material<T> {
    pub fn validate(&self, name: &str) -> Result<()> {
        let p = &self.props;
        let positive = [
            ("c_max", p.c_max),
            ("omega", p.omega),
            ("d0", p.d0),
            ("youngs", p.youngs),
            ("g_c", p.g_c),
            ("ell", p.ell),
        ];
        for (key, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name}.{key} must be positive, got {v}")));
            }
        }
        if !(p.poisson > T::zero() && p.poisson < T::lit(0.5)) {
            return Err(Error::Parameter(format!(
                "{name}.poisson must lie in (0, 0.5), got {}",
                p.poisson
            )));
        }
        Ok(())
    }

    /// NMC811 core properties with the bundled literature OCP.
    pub fn nmc811() -> Self {
        Material {
            props: MaterialPoint {
                c_max: T::lit(51765.0),
                omega: T::lit(7.88e-7),
                d0: T::lit(3.26e-14),
                youngs: T::lit(230e9),
                poisson: T::lit(0.253),
                g_c: T::lit(0.299),
                ell: T::lit(0.23e-6),
            },
            ocp: Arc::new(OcpCurve::nmc811()),
        }
    }

    /// NMC532 shell properties with the bundled literature OCP.
    pub fn nmc532() -> Self {
        Material {
            props: MaterialPoint {
                c_max: T::lit(49000.0),
                omega: T::lit(4.86e-7),
                d0: T::lit(2.48e-14),
                youngs: T::lit(201e9),
                poisson: T::lit(0.253),
                g_c: T::lit(0.408),
                ell: T::lit(0.27e-6),
            },
            ocp: Arc::new(OcpCurve::nmc532()),
        }
    }
}

/// Material assignment over the particle.
#[derive(Debug, Clone)]
pub struct Phases<T> {
    pub core: Material<T>,
    pub shell: Material<T>,
    pub grading: Grading,
    pub core_radius: T,
    pub outer_radius: T,
}

impl<T: Real> Phases<T> {
    pub fn new(core: Material<T>, shell: Material<T>, grading: Grading, core_radius: T, outer_radius: T) -> Self {
        Phases {
            core,
            shell,
            grading,
            core_radius,
            outer_radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.core.validate("core")?;
        self.shell.validate("shell")
    }

    /// Properties at spherical radius `rho` inside `region`.
    pub fn at(&self, region: Region, rho: T) -> MaterialPoint<T> {
        match (region, self.grading) {
            (Region::Core, _) => self.core.props,
            (Region::Shell, Grading::UniformShell) => self.shell.props,
            (Region::Shell, Grading::LinearGradedShell) => {
                let r = rho.max(self.core_radius).min(self.outer_radius);
                MaterialPoint::lerp(&self.core.props, &self.shell.props, r, self.core_radius, self.outer_radius)
                    .expect("radius clamped into the shell")
            }
        }
    }

    /// Shell-side OCP and `c_max` seen at the interface.
    pub fn shell_at_interface(&self) -> (&OcpCurve<T>, T) {
        match self.grading {
            Grading::UniformShell => (&self.shell.ocp, self.shell.props.c_max),
            Grading::LinearGradedShell => (&self.core.ocp, self.core.props.c_max),
        }
    }

    pub fn surface(&self) -> MaterialPoint<T> {
        self.at(Region::Shell, self.outer_radius)
    }

    /// Smallest phase-field length scale present.
    pub fn ell_min(&self) -> T {
        self.core.props.ell.min(self.shell.props.ell)
    }

    /// Average bulk toughness `(G_c,core + G_c,shell) / 2`.
    pub fn g_c_average(&self) -> T {
        (self.core.props.g_c + self.shell.props.g_c) / T::lit(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_moduli_are_consistent() {
        let m = Material::<f64>::nmc811().props;
        let (l, g, k) = (m.lame_lambda(), m.shear_modulus(), m.bulk_modulus());
        assert!((k - m.youngs / (3.0 * (1.0 - 2.0 * m.poisson))).abs() < 1e-6 * k);
        assert!((l + 2.0 * g / 3.0 - k).abs() < 1e-6 * k);
    }

    #[test]
    fn graded_shell_interpolates_every_property() {
        let phases = Phases::new(Material::<f64>::nmc811(), Material::nmc532(), Grading::LinearGradedShell, 4e-6, 4.8e-6);
        let mid = phases.at(Region::Shell, 4.4e-6);
        assert!((mid.youngs - 215.5e9).abs() < 1.0);
        assert!((mid.c_max - 0.5 * (51765.0 + 49000.0)).abs() < 1e-6);
        assert_eq!(phases.at(Region::Shell, 4e-6), phases.core.props);
        assert_eq!(phases.shell_at_interface().1, 51765.0);
    }

    #[test]
    fn invalid_poisson_rejected() {
        let mut m = Material::<f64>::nmc532();
        m.props.poisson = 0.5;
        assert!(m.validate("shell").is_err());
    }
}
