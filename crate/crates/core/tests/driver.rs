use coreshell::driver::{adapt_dt, FieldState, Observer, Protocol, Quiet, Scheme, Simulation, StepVerdict, Termination};
use coreshell::interface::InterfaceParams;
use coreshell::material::{Material, Phases, PhysicalConstants};
use coreshell::metrics::{ClassifierSettings, MetricsRow};
use coreshell::mesh::{CrackLocation, Grading, MeshResolution, ParticleSpec};

fn sim(crack: bool, c_rate: f64, scheme: Scheme) -> Simulation<f64> {
    let mut spec = ParticleSpec::from_relative(4e-6, 0.2);
    if crack {
        spec = spec.with_crack(CrackLocation::Surface, 0.3 * 0.8e-6);
    }
    let phases = Phases::new(Material::nmc811(), Material::nmc532(), Grading::UniformShell, 4e-6, 4.8e-6);
    let interface = InterfaceParams::from_bonding_ratio(1e-7, 1.0, &phases);
    let res = MeshResolution::from_length_scales(4.0 * phases.ell_min(), 4e-7, 0.6e-6);
    let protocol = Protocol { c_rate, ..Protocol::default() };
    Simulation::new(
        spec,
        phases,
        PhysicalConstants::default(),
        interface,
        protocol,
        scheme,
        ClassifierSettings::default(),
        &res,
    )
    .unwrap()
}

#[test]
fn zero_flux_state_is_a_fixed_point() {
    let mut s = sim(false, 0.0, Scheme::default());
    let state = s.initial_state().unwrap();
    assert!(state.phi.iter().all(|&p| p == 0.0));
    let out = s.staggered_step(&state, 5.0, 20).unwrap();
    let next = out.state;
    assert_eq!(next.time, state.time + 5.0);
    let scale = s.phases.shell.props.c_max;
    let dc = next.c.iter().zip(&state.c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dc < 1e-10 * scale, "max |dc| = {dc}");
    assert!(next.phi.iter().all(|&p| p.abs() < 1e-12));
    assert!(next.u.iter().all(|&v| v.abs() < 1e-15), "reference state is stress free");
}

#[test]
fn one_cc_step_adds_the_applied_charge() {
    let mut s = sim(true, 1.0, Scheme::default());
    let state = s.initial_state().unwrap();
    let dt = 3.6;
    let before = s.transport().total_lithium(&state.c);
    let out = s.staggered_step(&state, dt, 20).unwrap();
    let after = s.transport().total_lithium(&out.state.c);
    let expect = s.j0 * s.transport().surface_area() * dt;
    let rel = ((after - before) - expect).abs() / expect;
    assert!(rel < 1e-8, "relative charge error {rel:e}");
}

#[test]
fn null_protocol_terminates_cleanly() {
    let mut s = sim(false, 0.0, Scheme::default());
    let out = s.run(&mut Quiet).unwrap();
    assert_eq!(out.termination, Termination::NullProtocol);
    assert_eq!(out.series.rows.len(), 1);
    let sol0 = out.series.rows[0].sol;
    assert!((out.final_sol() - sol0).abs() < 1e-15);
    assert!((sol0 - 0.1).abs() < 0.2, "starts near the initial stoichiometry");
}

struct Monotone {
    last: Option<FieldState<f64>>,
    steps: usize,
    crack: Vec<f64>,
}

impl Observer<f64> for Monotone {
    fn on_step(&mut self, _: &Simulation<f64>, state: &FieldState<f64>, row: &MetricsRow) {
        if let Some(prev) = &self.last {
            for (a, b) in state.phi.iter().zip(&prev.phi) {
                assert!(a >= b, "phi decreased {b} -> {a}");
            }
            assert!(state.history.dominates(&prev.history), "history decreased");
            assert!(state.phi.iter().all(|&p| p <= 1.0));
        }
        self.crack.push(row.crack_volume);
        self.steps += 1;
        self.last = Some(state.clone());
    }
}

#[test]
fn damage_and_history_never_decrease() {
    let scheme = Scheme { max_steps: 25, ..Scheme::default() };
    let mut s = sim(true, 1.0, scheme);
    let mut obs = Monotone { last: None, steps: 0, crack: Vec::new() };
    let out = s.run(&mut obs).unwrap();
    assert_eq!(out.termination, Termination::StepCap);
    assert_eq!(obs.steps, 26);
    assert!(obs.crack.windows(2).all(|w| w[1] >= w[0]));
    assert!(out.series.rows.iter().all(|r| (0.0..=1.0).contains(&r.sol)));
}

#[test]
fn identical_runs_give_identical_series() {
    let scheme = Scheme { max_steps: 8, ..Scheme::default() };
    let a = sim(true, 1.0, scheme).run(&mut Quiet).unwrap();
    let b = sim(true, 1.0, scheme).run(&mut Quiet).unwrap();
    assert_eq!(a.series.rows, b.series.rows);
}

#[test]
fn step_size_rules() {
    let scheme = Scheme::default();
    let dt_max = Protocol::default().dt_max();
    assert_eq!(dt_max, 36.0);
    let easy = StepVerdict::Accepted { inner_iterations: 1, max_dphi: 0.0 };
    assert!((adapt_dt(2.0, easy, &scheme, dt_max) - 2.4).abs() < 1e-12);
    assert_eq!(adapt_dt(2.0, StepVerdict::Rejected, &scheme, dt_max), 1.0);
    assert_eq!(adapt_dt(dt_max, easy, &scheme, dt_max), dt_max);
    // hard steps keep dt
    let hard = StepVerdict::Accepted { inner_iterations: 4, max_dphi: 0.0 };
    assert_eq!(adapt_dt(2.0, hard, &scheme, dt_max), 2.0);
    let damaging = StepVerdict::Accepted { inner_iterations: 1, max_dphi: 0.05 };
    assert_eq!(adapt_dt(2.0, damaging, &scheme, dt_max), 2.0);
    // floor
    assert_eq!(adapt_dt(1.5e-3, StepVerdict::Rejected, &scheme, dt_max), scheme.dt_min);
    assert_eq!(Protocol { c_rate: 2.0, ..Protocol::default() }.dt_max(), 18.0);
}

#[test]
fn invalid_protocols_are_rejected() {
    for p in [
        Protocol { cutoff_fraction: 0.0, ..Protocol::default() },
        Protocol { cutoff_fraction: 1.0, ..Protocol::default() },
        Protocol { x_initial: 0.99, ..Protocol::default() },
        Protocol { x_cv: 1.2, ..Protocol::default() },
    ] {
        assert!(p.validate().is_err(), "{p:?}");
    }
    assert!(Scheme { dt_min: 0.0, ..Scheme::default() }.validate().is_err());
}
