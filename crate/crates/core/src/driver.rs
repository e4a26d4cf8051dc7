//! Staggered chemo-mechano-damage time integration under a CC-CV protocol.
//!
//! Each step iterates {transport, equilibrium, history, damage} until the
//! damage field stops changing. Rejected steps are retried with half the
//! time step; accepted easy steps let it grow.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::scalar_pattern;
use crate::fem::{LinearSolverKind, ScalarField, SolverOptions, SparsityPattern};
use crate::fracture::{seed_initial_crack, solve_phase_field, update_history, HistoryField};
use crate::interface::{build_toughness_field, solve_interface_indicator, InterfaceParams};
use crate::material::{Phases, PhysicalConstants};
use crate::mechanics::{MechanicsInput, MechanicsSolver};
use crate::mesh::{build_particle_mesh, radius, CrackLocation, Mesh, MeshResolution, ParticleSpec, Region};
use crate::metrics::{
    classify_pattern, compute_crack_volume, compute_sol, debonded_arc_degrees, ClassifierSettings, CrackPattern,
    MetricsRow, MetricsSeries,
};
use crate::real::Real;
use crate::transport::{cc_flux, interface_constraint, Stage, TransportBC, TransportInput, TransportReport, TransportSolver};

/// Charging protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protocol {
    /// C-rate (1/h). Zero ends the run immediately.
    pub c_rate: f64,
    /// CV ends when the mean surface influx drops below this fraction of the CC flux.
    pub cutoff_fraction: f64,
    /// Surface stoichiometry that ends CC and is held during CV.
    pub x_cv: f64,
    /// Uniform initial shell stoichiometry.
    pub x_initial: f64,
    /// K
    pub temperature: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            c_rate: 1.0,
            cutoff_fraction: 0.1,
            x_cv: 0.98,
            x_initial: 0.1,
            temperature: 298.15,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if !self.c_rate.is_finite() {
            return bad(format!("C-rate must be finite, got {}", self.c_rate));
        }
        if !(self.cutoff_fraction > 0.0 && self.cutoff_fraction < 1.0) {
            return bad(format!("cutoff fraction must lie in (0, 1), got {}", self.cutoff_fraction));
        }
        if !(self.x_initial > 0.0 && self.x_initial < self.x_cv) {
            return bad(format!(
                "initial stoichiometry {} must lie in (0, x_cv = {})",
                self.x_initial, self.x_cv
            ));
        }
        if !(self.x_cv <= 1.0) {
            return bad(format!("x_cv must not exceed 1, got {}", self.x_cv));
        }
        if !(self.temperature > 0.0) {
            return bad(format!("temperature must be positive, got {}", self.temperature));
        }
        Ok(())
    }

    /// Upper time-step bound `0.01 * 3600 / C`.
    pub fn dt_max(&self) -> f64 {
        0.01 * 3600.0 / self.c_rate.abs().max(1e-12)
    }
}

/// Parameters of the time integration and coupling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scheme {
    /// First time step (s); `None` starts at a tenth of `dt_max`.
    pub dt_initial: Option<f64>,
    pub dt_min: f64,
    /// Overrides the protocol bound when set.
    pub dt_max: Option<f64>,
    pub growth: f64,
    pub shrink: f64,
    /// Steps with at most this many inner iterations may grow `dt`.
    pub easy_iterations: usize,
    /// ... provided the damage changed by less than this.
    pub easy_dphi: f64,
    pub stagger_tol: f64,
    /// Inner loop also waits until the hydrostatic stress update, measured as
    /// the chemical potential shift `Omega * d(sigma_h) / RT`, drops below this.
    pub stagger_sigma_tol: f64,
    pub max_stagger: usize,
    /// Inner-iteration cap once `dt` sits at `dt_min`.
    pub max_stagger_at_dt_min: usize,
    pub max_steps: usize,
    /// Simulated-time cap (s); `None` means `20 * 3600 / C`.
    pub max_time: Option<f64>,
    pub residual_stiffness: f64,
    pub degrade_diffusivity: bool,
    pub seed_amplitude: f64,
    pub linear_solver: LinearSolverKind,
    pub linear_tol: f64,
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme {
            dt_initial: None,
            dt_min: 1e-3,
            dt_max: None,
            growth: 1.2,
            shrink: 0.5,
            easy_iterations: 3,
            easy_dphi: 0.02,
            stagger_tol: 1e-3,
            stagger_sigma_tol: 1e-3,
            max_stagger: 20,
            max_stagger_at_dt_min: 1000,
            max_steps: 200_000,
            max_time: None,
            residual_stiffness: crate::fracture::RESIDUAL_STIFFNESS,
            degrade_diffusivity: true,
            seed_amplitude: crate::fracture::SEED_AMPLITUDE,
            linear_solver: LinearSolverKind::Cg,
            linear_tol: 1e-10,
        }
    }
}

impl Scheme {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if !(self.dt_min > 0.0) {
            return bad("dt_min must be positive");
        }
        if self.dt_max.is_some_and(|m| !(m >= self.dt_min)) {
            return bad("dt_max must be at least dt_min");
        }
        if self.dt_initial.is_some_and(|d| !(d > 0.0)) {
            return bad("dt_initial must be positive");
        }
        if !(self.growth >= 1.0) || !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("growth must be >= 1 and shrink in (0, 1)");
        }
        if !(self.stagger_tol > 0.0) || !(self.stagger_sigma_tol > 0.0) || self.max_stagger == 0 {
            return bad("stagger tolerance and iteration cap must be positive");
        }
        if !(self.residual_stiffness > 0.0 && self.residual_stiffness < 1.0) {
            return bad("residual stiffness must lie in (0, 1)");
        }
        if !(self.seed_amplitude >= 0.0) {
            return bad("seed amplitude must be non-negative");
        }
        Ok(())
    }
}

/// Outcome of a step attempt, as seen by the step-size controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepVerdict {
    Accepted { inner_iterations: usize, max_dphi: f64 },
    Rejected,
}

/// Next time step: grow after easy steps, halve after rejections, clamp.
pub fn adapt_dt(dt: f64, verdict: StepVerdict, scheme: &Scheme, dt_max: f64) -> f64 {
    let next = match verdict {
        StepVerdict::Accepted {
            inner_iterations,
            max_dphi,
        } if inner_iterations <= scheme.easy_iterations && max_dphi < scheme.easy_dphi => dt * scheme.growth,
        StepVerdict::Accepted { .. } => dt,
        StepVerdict::Rejected => dt * scheme.shrink,
    };
    next.max(scheme.dt_min).min(dt_max)
}

/// Every field of the coupled problem at one instant.
#[derive(Debug, Clone)]
pub struct FieldState<T> {
    /// Concentration on the duplicated layout (mol/m^3).
    pub c: Vec<T>,
    /// Displacement, interleaved `(u_r, u_z)` per node.
    pub u: Vec<T>,
    pub phi: Vec<T>,
    pub history: HistoryField<T>,
    /// Nodal hydrostatic stress on the concentration layout (Pa).
    pub sigma_h: Vec<T>,
    pub time: f64,
    pub stage: Stage,
    pub dt: f64,
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    pub state: FieldState<T>,
    pub inner_iterations: usize,
    /// Largest nodal damage increment over the step.
    pub max_dphi: f64,
    pub transport: TransportReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Termination {
    /// CV current fell to the cutoff.
    Cutoff,
    /// C-rate zero: nothing to do.
    NullProtocol,
    /// Delithiation reached the bottom of the OCP tables.
    Depleted,
    StepCap,
    TimeCap,
    Aborted(String),
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub series: MetricsSeries,
    pub pattern: CrackPattern,
    pub termination: Termination,
    pub initial_phi: Vec<T>,
    pub final_state: FieldState<T>,
    /// Time of the CC to CV switch.
    pub cv_start: Option<f64>,
    /// First time the cracked interface arc reached the debonding threshold.
    pub debond_onset: Option<f64>,
    pub rejected_steps: usize,
    pub wall_seconds: f64,
}

impl<T> RunResult<T> {
    pub fn final_sol(&self) -> f64 {
        self.series.final_sol().unwrap_or(f64::NAN)
    }

    pub fn completed(&self) -> bool {
        !matches!(self.termination, Termination::Aborted(_))
    }
}

/// Hook for progress output and snapshots.
pub trait Observer<T: Real> {
    fn on_step(&mut self, _sim: &Simulation<T>, _state: &FieldState<T>, _row: &MetricsRow) {}
}

/// Observer that ignores everything.
pub struct Quiet;

impl<T: Real> Observer<T> for Quiet {}

/// Assembled problem: mesh, materials and the reusable solvers.
pub struct Simulation<T> {
    pub spec: ParticleSpec<T>,
    pub phases: Phases<T>,
    pub constants: PhysicalConstants<T>,
    pub interface: InterfaceParams<T>,
    pub protocol: Protocol,
    pub scheme: Scheme,
    pub classifier: ClassifierSettings,
    pub mesh: Mesh<T>,
    pub zeta: ScalarField<T>,
    pub g_c: ScalarField<T>,
    /// CC flux (mol/m^2/s).
    pub j0: T,
    /// Stress-free reference concentration.
    pub c_ref: Vec<T>,
    transport: TransportSolver<T>,
    mechanics: MechanicsSolver<T>,
    phase_pattern: Arc<SparsityPattern>,
    opts: SolverOptions<T>,
}

impl<T: Real> Simulation<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: ParticleSpec<T>,
        phases: Phases<T>,
        mut constants: PhysicalConstants<T>,
        interface: InterfaceParams<T>,
        protocol: Protocol,
        scheme: Scheme,
        classifier: ClassifierSettings,
        resolution: &MeshResolution<T>,
    ) -> Result<Self> {
        spec.validate()?;
        phases.validate()?;
        interface.validate()?;
        protocol.validate()?;
        scheme.validate()?;
        constants.temperature = T::lit(protocol.temperature);
        let mesh = build_particle_mesh(&spec, resolution)?;
        let opts = SolverOptions {
            kind: scheme.linear_solver,
            tol: T::lit(scheme.linear_tol),
            ..SolverOptions::default()
        };
        let zeta = solve_interface_indicator(&mesh, interface.l_zeta, &opts)?;
        let g_c = build_toughness_field(&mesh, &zeta, &phases, interface.g_c_interface);
        let j0 = cc_flux(&spec, &phases, T::lit(protocol.c_rate));
        let transport = TransportSolver::new(&mesh, &phases, &constants);
        let mechanics = MechanicsSolver::new(&mesh)?;
        let phase_pattern = scalar_pattern(mesh.n_nodes(), &mesh.triangles);
        let mut sim = Simulation {
            spec,
            phases,
            constants,
            interface,
            protocol,
            scheme,
            classifier,
            mesh,
            zeta,
            g_c,
            j0,
            c_ref: Vec::new(),
            transport,
            mechanics,
            phase_pattern,
            opts,
        };
        sim.c_ref = sim.initial_concentration();
        Ok(sim)
    }

    pub fn transport(&self) -> &TransportSolver<T> {
        &self.transport
    }

    pub fn solver_options(&self) -> &SolverOptions<T> {
        &self.opts
    }

    pub fn dt_max(&self) -> f64 {
        self.scheme.dt_max.unwrap_or_else(|| self.protocol.dt_max())
    }

    /// Uniform shell stoichiometry; the core sits in equilibrium with it.
    pub fn initial_concentration(&self) -> Vec<T> {
        let x = T::lit(self.protocol.x_initial);
        let sides = self.transport.sides();
        let core = interface_constraint(x * sides.shell_c_max, T::zero(), T::zero(), sides).c_core;
        (0..self.mesh.n_conc_dofs)
            .map(|d| match self.mesh.conc_dof_region[d] {
                Region::Core => core,
                Region::Shell => {
                    let rho = radius(self.mesh.nodes[self.mesh.conc_dof_node[d]]);
                    x * self.phases.at(Region::Shell, rho).c_max
                }
            })
            .collect()
    }

    /// Length scale used for seeding and by the classifier.
    pub fn seed_length_scale(&self) -> T {
        match self.spec.crack.location {
            CrackLocation::Surface => self.phases.surface().ell,
            CrackLocation::Center => self.phases.core.props.ell,
            CrackLocation::Interface | CrackLocation::None => self.phases.ell_min(),
        }
    }

    pub fn initial_state(&self) -> Result<FieldState<T>> {
        let history = seed_initial_crack(
            &self.mesh,
            &self.spec.crack,
            self.seed_length_scale(),
            T::lit(self.scheme.seed_amplitude),
        )?;
        let phi = solve_phase_field(
            &self.mesh,
            &self.phase_pattern,
            &history,
            &self.g_c,
            &self.phases,
            &self.opts,
            None,
        )?
        .0
        .into_iter()
        .map(|v| v.max(T::zero()).min(T::one()))
        .collect();
        let dt = self
            .scheme
            .dt_initial
            .unwrap_or(0.1 * self.dt_max())
            .max(self.scheme.dt_min)
            .min(self.dt_max());
        Ok(FieldState {
            c: self.c_ref.clone(),
            u: vec![T::zero(); 2 * self.mesh.n_nodes()],
            phi,
            history,
            sigma_h: vec![T::zero(); self.mesh.n_conc_dofs],
            time: 0.0,
            stage: Stage::Cc,
            dt,
            step: 0,
        })
    }

    pub fn bc(&self, stage: Stage) -> TransportBC<T> {
        TransportBC {
            stage,
            j0: self.j0,
            x_cv: T::lit(self.protocol.x_cv),
            cutoff_fraction: T::lit(self.protocol.cutoff_fraction),
        }
    }

    /// One implicit step of length `dt` with at most `max_inner` stagger
    /// iterations. The damage is kept pointwise non-decreasing.
    pub fn staggered_step(&mut self, state: &FieldState<T>, dt: f64, max_inner: usize) -> Result<StepOutcome<T>> {
        let mesh = &self.mesh;
        let k = T::lit(self.scheme.residual_stiffness);
        let tol = T::lit(self.scheme.stagger_tol);
        let bc = self.bc(state.stage);
        let mut phi = state.phi.clone();
        let mut sigma = state.sigma_h.clone();
        let mut u = state.u.clone();
        let mut c_guess: Option<Vec<T>> = None;
        let mut last_dphi = T::zero();
        let sigma_tol = T::lit(self.scheme.stagger_sigma_tol) * self.constants.rt()
            / self.phases.core.props.omega.max(self.phases.shell.props.omega);
        // Lagging sigma_h in the drift term gives a Picard map with a negative
        // eigenvalue that exceeds one in magnitude once dt is large, so the
        // stress handed back to transport is Aitken-relaxed.
        let mut omega = T::lit(0.5);
        let mut prev_r: Option<Vec<T>> = None;
        for it in 1..=max_inner {
            let report = self.transport.step(
                mesh,
                &TransportInput {
                    phases: &self.phases,
                    constants: &self.constants,
                    c_old: &state.c,
                    sigma_h: &sigma,
                    phi: &phi,
                    residual_stiffness: k,
                    degrade_diffusivity: self.scheme.degrade_diffusivity,
                    bc,
                },
                T::lit(dt),
                c_guess.as_deref(),
            )?;
            let eq = self.mechanics.solve_equilibrium(
                mesh,
                &MechanicsInput {
                    phases: &self.phases,
                    c: &report.c,
                    c0: &self.c_ref,
                    phi: &phi,
                    residual_stiffness: k,
                },
                Some(&u),
            )?;
            let history = update_history(&state.history, &eq.stress.psi_plus);
            let solved = solve_phase_field(mesh, &self.phase_pattern, &history, &self.g_c, &self.phases, &self.opts, Some(&phi))?;
            let new_phi: Vec<T> = solved
                .0
                .iter()
                .zip(&state.phi)
                .map(|(&p, &old)| p.max(old).min(T::one()))
                .collect();
            let new_sigma = self
                .mechanics
                .nodal_hydrostatic_stress(mesh, &eq.stress, &self.opts, Some(&sigma))?
                .0;
            let r: Vec<T> = new_sigma.iter().zip(&sigma).map(|(&a, &b)| a - b).collect();
            let r_inf = r.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
            if let Some(pr) = &prev_r {
                let (mut num, mut den) = (T::zero(), T::zero());
                for (&a, &b) in r.iter().zip(pr) {
                    num = num + b * (a - b);
                    den = den + (a - b) * (a - b);
                }
                if den > T::zero() {
                    omega = (-omega * num / den).max(T::lit(0.05)).min(T::one());
                }
            }
            last_dphi = new_phi
                .iter()
                .zip(&phi)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            if log::log_enabled!(log::Level::Trace) {
                let (imax, _) = new_phi
                    .iter()
                    .zip(&phi)
                    .enumerate()
                    .fold((0, T::zero()), |(im, m), (i, (&a, &b))| if (a - b).abs() > m { (i, (a - b).abs()) } else { (im, m) });
                let dc = c_guess
                    .as_ref()
                    .map_or(T::zero(), |g| g.iter().zip(&report.c).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())));
                let p = mesh.nodes[imax];
                log::trace!(
                    "stagger {it}: dphi {last_dphi:.3e} at ({:.3e}, {:.3e}) phi {:.3} dsigma {r_inf:.3e} omega {omega:.3} dc {dc:.3e} eq its {}",
                    p[0],
                    p[1],
                    new_phi[imax],
                    eq.iterations
                );
            }
            phi = new_phi;
            u = eq.displacement.0;
            if last_dphi < tol && r_inf <= sigma_tol {
                let max_dphi = phi.iter().zip(&state.phi).fold(0.0f64, |m, (&a, &b)| m.max((a - b).as_f64()));
                return Ok(StepOutcome {
                    state: FieldState {
                        c: report.c.clone(),
                        u,
                        phi,
                        history,
                        sigma_h: new_sigma,
                        time: state.time + dt,
                        stage: state.stage,
                        dt,
                        step: state.step + 1,
                    },
                    inner_iterations: it,
                    max_dphi,
                    transport: report,
                });
            }
            for (s, &ri) in sigma.iter_mut().zip(&r) {
                *s = *s + omega * ri;
            }
            prev_r = Some(r);
            c_guess = Some(report.c);
        }
        Err(Error::NoConvergence {
            solver: "staggered iteration",
            iterations: max_inner,
            residual: last_dphi.as_f64(),
            tol: self.scheme.stagger_tol,
        })
    }

    pub fn metrics_row(&self, state: &FieldState<T>, surface_flux: f64, inner: usize) -> MetricsRow {
        let sol = compute_sol(&self.mesh, &state.c, &self.phases);
        MetricsRow {
            step: state.step,
            time: state.time,
            dt: state.dt,
            stage: state.stage,
            sol: sol.total.as_f64(),
            sol_core: sol.core.as_f64(),
            sol_shell: sol.shell.as_f64(),
            delta_sol: sol.delta.as_f64(),
            crack_volume: compute_crack_volume(&self.mesh, &state.phi, T::lit(self.classifier.threshold)).as_f64(),
            debond_arc: debonded_arc_degrees(&self.mesh, &state.phi, &self.zeta, &self.classifier),
            surface_flux,
            inner_iterations: inner,
        }
    }

    pub fn classify(&self, initial_phi: &[T], final_phi: &[T]) -> CrackPattern {
        classify_pattern(
            &self.mesh,
            initial_phi,
            final_phi,
            &self.zeta,
            self.seed_length_scale().as_f64(),
            &self.classifier,
        )
    }

    /// Runs the protocol to its cutoff (or a cap, or an abort).
    pub fn run(&mut self, observer: &mut dyn Observer<T>) -> Result<RunResult<T>> {
        let started = Instant::now();
        let mut state = self.initial_state()?;
        let initial_phi = state.phi.clone();
        let mut series = MetricsSeries::default();
        let first = self.metrics_row(&state, 0.0, 0);
        observer.on_step(self, &state, &first);
        series.push(first);
        let dt_max = self.dt_max();
        let c_rate = self.protocol.c_rate;
        let max_time = self.scheme.max_time.unwrap_or(20.0 * 3600.0 / c_rate.abs().max(1e-12));
        let j0 = self.j0.as_f64();
        let cutoff = self.protocol.cutoff_fraction * j0.abs();
        let mut cv_start = None;
        let mut debond_onset = None;
        let mut rejected = 0;
        let mut dt = state.dt;
        let mut last_cv_flux: Option<f64> = None;
        let termination = if c_rate == 0.0 {
            Termination::NullProtocol
        } else {
            loop {
                if state.step >= self.scheme.max_steps {
                    break Termination::StepCap;
                }
                if state.time >= max_time {
                    break Termination::TimeCap;
                }
                let at_floor = dt <= self.scheme.dt_min * (1.0 + 1e-12);
                let cap = if at_floor {
                    self.scheme.max_stagger_at_dt_min
                } else {
                    self.scheme.max_stagger
                };
                let outcome = match self.staggered_step(&state, dt, cap) {
                    Ok(o) => o,
                    Err(e @ (Error::Parameter(_) | Error::Config(_) | Error::Io { .. })) => return Err(e),
                    Err(e) => {
                        rejected += 1;
                        if at_floor {
                            let reason = format!(
                                "{}; {}",
                                Error::TimeStepUnderflow { time: state.time, dt },
                                e
                            );
                            log::error!("{reason}");
                            break Termination::Aborted(reason);
                        }
                        log::debug!("step rejected at t = {:.3} s, dt = {dt:.3e} s: {e}", state.time);
                        dt = adapt_dt(dt, StepVerdict::Rejected, &self.scheme, dt_max);
                        continue;
                    }
                };
                let flux = outcome.transport.mean_surface_flux.as_f64();
                let prev_crack = series.last().map_or(0.0, |r| r.crack_volume);
                state = outcome.state;
                let row = self.metrics_row(&state, flux, outcome.inner_iterations);
                if debond_onset.is_none() && row.debond_arc >= self.classifier.debond_arc_degrees {
                    debond_onset = Some(row.time);
                    log::info!("debonding onset at t = {:.1} s", row.time);
                }
                log::info!(
                    "step {} t {:.2} s {} SOL {:.4} a_c {:.4e} dt {:.3e} inner {}",
                    row.step,
                    row.time,
                    row.stage,
                    row.sol,
                    row.crack_volume,
                    state.dt,
                    row.inner_iterations
                );
                observer.on_step(self, &state, &row);
                series.push(row);
                let verdict = StepVerdict::Accepted {
                    inner_iterations: outcome.inner_iterations,
                    max_dphi: outcome.max_dphi,
                };
                dt = adapt_dt(dt, verdict, &self.scheme, dt_max);
                state.dt = dt;
                match state.stage {
                    Stage::Cc => {
                        let damage = self
                            .scheme
                            .degrade_diffusivity
                            .then_some((state.phi.as_slice(), T::lit(self.scheme.residual_stiffness)));
                        let x_s = self.transport.mean_surface_stoichiometry(&state.c, damage).as_f64();
                        if c_rate > 0.0 && x_s >= self.protocol.x_cv {
                            log::info!("switching to CV at t = {:.1} s", state.time);
                            cv_start = Some(state.time);
                            state.stage = Stage::Cv;
                        } else if c_rate < 0.0 && x_s <= crate::ocp::REQUIRED_DOMAIN.0 {
                            break Termination::Depleted;
                        }
                    }
                    Stage::Cv => {
                        if let Some(prev) = last_cv_flux {
                            if flux > prev && row.crack_volume > prev_crack {
                                log::info!("CV current rose with new damage at t = {:.1} s", row.time);
                            }
                        }
                        last_cv_flux = Some(flux);
                        if flux <= cutoff {
                            break Termination::Cutoff;
                        }
                    }
                }
            }
        };
        let pattern = self.classify(&initial_phi, &state.phi);
        Ok(RunResult {
            series,
            pattern,
            termination,
            initial_phi,
            final_state: state,
            cv_start,
            debond_onset,
            rejected_steps: rejected,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}
