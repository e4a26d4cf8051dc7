//! AT2 phase-field fracture: degradation, history field, crack seeding and
//! the damage equation `(G_c/l)(phi - l^2 lap phi) = 2 (1 - phi) H`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_screened, ScreenedCoefficients};
use crate::fem::element::{interpolate, N_QP};
use crate::fem::{solve_spd, ScalarField, SolverOptions, SparsityPattern};
use crate::material::Phases;
use crate::mesh::{radius, CrackLocation, InitialCrack, Mesh, ParticleSpec};
use crate::real::Real;

pub const RESIDUAL_STIFFNESS: f64 = 1e-6;
/// Seeding amplitude `alpha_0` (J/m^3).
pub const SEED_AMPLITUDE: f64 = 1e12;
/// Width factor in `exp(-100 z^2 / l^2)`.
pub const SEED_WIDTH_FACTOR: f64 = 100.0;

/// `g(phi) = (1 - phi)^2 + k`.
pub fn degradation<T: Real>(phi: T, k: T) -> T {
    (T::one() - phi).powi(2) + k
}

/// Running maximum of the tensile energy density at quadrature points.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryField<T>(pub Vec<[T; N_QP]>);

impl<T: Real> HistoryField<T> {
    pub fn zeros(n_elements: usize) -> Self {
        HistoryField(vec![[T::zero(); N_QP]; n_elements])
    }

    pub fn max(&self) -> T {
        self.0.iter().flatten().fold(T::zero(), |m, &v| m.max(v))
    }

    /// True when every entry is at least the corresponding entry of `older`.
    pub fn dominates(&self, older: &HistoryField<T>) -> bool {
        self.0
            .iter()
            .flatten()
            .zip(older.0.iter().flatten())
            .all(|(a, b)| a >= b)
    }
}

pub fn update_history<T: Real>(old: &HistoryField<T>, psi_plus: &[[T; N_QP]]) -> HistoryField<T> {
    HistoryField(
        old.0
            .iter()
            .zip(psi_plus)
            .map(|(h, p)| std::array::from_fn(|q| h[q].max(p[q])))
            .collect(),
    )
}

/// History seeding `alpha_0 exp(-100 z^2 / l^2)` restricted to the radial band
/// of the initial crack on the plane `z = 0`.
pub fn seed_initial_crack<T: Real>(mesh: &Mesh<T>, crack: &InitialCrack<T>, ell: T, alpha0: T) -> Result<HistoryField<T>> {
    let mut h = HistoryField::zeros(mesh.n_elements());
    if crack.location == CrackLocation::None {
        return Ok(h);
    }
    if !(ell > T::zero()) {
        return Err(Error::Parameter("seeding length scale must be positive".into()));
    }
    let spec = ParticleSpec {
        core_radius: mesh.core_radius,
        shell_thickness: mesh.outer_radius - mesh.core_radius,
        grading: Default::default(),
        crack: *crack,
    };
    spec.validate()?;
    let band = spec.crack_band().expect("crack present");
    let width = T::lit(SEED_WIDTH_FACTOR) / (ell * ell);
    for (e, he) in h.0.iter_mut().enumerate() {
        for (q, qp) in mesh.element(e).quad_points().iter().enumerate() {
            if band.contains_radius(radius(qp.x)) {
                let z = qp.x[1];
                he[q] = alpha0 * (-width * z * z).exp();
            }
        }
    }
    Ok(h)
}

/// Solves the damage equation for fixed history. The reaction term is
/// row-sum lumped so very large `H` cannot produce overshoot.
pub fn solve_phase_field<T: Real>(
    mesh: &Mesh<T>,
    pattern: &Arc<SparsityPattern>,
    history: &HistoryField<T>,
    g_c: &ScalarField<T>,
    phases: &Phases<T>,
    opts: &SolverOptions<T>,
    guess: Option<&[T]>,
) -> Result<ScalarField<T>> {
    if history.0.iter().flatten().all(|&v| v == T::zero()) {
        return Ok(ScalarField::zeros(mesh.n_nodes()));
    }
    let two = T::lit(2.0);
    let system = assemble_screened(mesh, &mesh.triangles, pattern, true, |e, q, qp| {
        let ell = phases.at(mesh.regions[e], radius(qp.x)).ell;
        let gc = interpolate(&qp.shape, mesh.triangles[e].map(|n| g_c[n]));
        let hq = history.0[e][q];
        ScreenedCoefficients {
            reaction: gc / ell + two * hq,
            diffusion: gc * ell,
            source: two * hq,
        }
    });
    let (phi, _) = solve_spd(&system, opts, guess)?;
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPhysical("non-finite phase field".into()));
    }
    Ok(ScalarField(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::scalar_pattern;
    use crate::material::Material;
    use crate::mesh::{Grading, Region};

    #[test]
    fn degradation_values() {
        let k = RESIDUAL_STIFFNESS;
        assert!((degradation(0.0, k) - 1.000001).abs() < 1e-15);
        assert!((degradation(1.0, k) - 1e-6).abs() < 1e-18);
        assert!((degradation(0.5, k) - 0.250001).abs() < 1e-15);
    }

    #[test]
    fn history_is_a_pointwise_max() {
        let old = HistoryField(vec![[0.0, 5.0, 1.0]]);
        let new = update_history(&old, &[[3.0, 3.0, 2.0]]);
        assert_eq!(new.0[0], [3.0, 5.0, 2.0]);
        assert!(new.dominates(&old));
    }

    fn phases(mesh: &Mesh<f64>) -> Phases<f64> {
        let m = Material::nmc811();
        Phases::new(m.clone(), m, Grading::UniformShell, mesh.core_radius, mesh.outer_radius)
    }

    #[test]
    fn strip_uniform_history_gives_homogeneous_solution() {
        let mesh = Mesh::planar_strip(2e-6, 1e-6, 6, 4).unwrap();
        let ph = phases(&mesh);
        let pat = scalar_pattern(mesh.n_nodes(), &mesh.triangles);
        let mat = ph.at(Region::Core, 0.0);
        let gc = ScalarField::constant(mesh.n_nodes(), mat.g_c);
        for h in [1e2, 1e4, 1e6, 1e8] {
            let hist = HistoryField(vec![[h; N_QP]; mesh.n_elements()]);
            let opts = SolverOptions::default();
            let phi = solve_phase_field(&mesh, &pat, &hist, &gc, &ph, &opts, None).unwrap();
            let expect = 2.0 * h / (mat.g_c / mat.ell + 2.0 * h);
            for v in phi.iter() {
                assert!((v - expect).abs() < 1e-6, "{h}: {v} vs {expect}");
            }
        }
    }

    #[test]
    fn zero_history_gives_zero_damage() {
        let mesh = Mesh::planar_strip(1e-6, 1e-6, 3, 3).unwrap();
        let ph = phases(&mesh);
        let pat = scalar_pattern(mesh.n_nodes(), &mesh.triangles);
        let gc = ScalarField::constant(mesh.n_nodes(), 0.3);
        let hist = HistoryField::zeros(mesh.n_elements());
        let phi = solve_phase_field(&mesh, &pat, &hist, &gc, &ph, &SolverOptions::default(), None).unwrap();
        assert!(phi.iter().all(|&v| v == 0.0));
    }
}
