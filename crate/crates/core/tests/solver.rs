use std::f64::consts::PI;

use vds::config::parse_config;
use vds::delay::DelayProfile;
use vds::energy::{self, check_monotone, EnergyWeights};
use vds::feasibility::{certify, DampingPair};
use vds::field::{Grid, Profile};
use vds::kernel::RelaxationKernel;
use vds::solver::{choose_dt, run, setup_for, EngineMode, InitialData, SimSetup, Simulation};

fn setup(grid: Grid, kernel: RelaxationKernel, a1: f64, dt: f64, init: &InitialData) -> SimSetup {
    SimSetup::new(
        grid,
        kernel,
        DelayProfile::sinusoidal(0.8, 0.2, 1.5).unwrap(),
        DampingPair::new(1.0, a1).unwrap(),
        EngineMode::Recursive,
        dt,
        init,
    )
}

fn bits(sim: &Simulation) -> Vec<u64> {
    let st = sim.state();
    st.u()
        .values()
        .iter()
        .chain(st.v().values())
        .map(|x| x.to_bits())
        .collect()
}

#[test]
fn zero_feedback_ignores_the_delay_buffer() {
    let grid = Grid::line(1.0, 40).unwrap();
    let k = RelaxationKernel::prony(&[(0.4, 1.0)]).unwrap();
    let init = InitialData {
        u1: Profile::Gaussian {
            center: vec![0.4],
            width: 0.1,
            amplitude: 1.0,
        },
        ..InitialData::default()
    };
    let mut with = setup(grid, k.clone(), 0.0, 0.01, &init);
    with.delay_buffer = true;
    let mut without = setup(grid, k, 0.0, 0.01, &init);
    without.delay_buffer = false;
    let mut a = Simulation::new(with).unwrap();
    let mut b = Simulation::new(without).unwrap();
    assert!(a.state().history().stores_fields());
    assert!(!b.state().history().stores_fields());
    for _ in 0..500 {
        a.step().unwrap();
        b.step().unwrap();
        assert_eq!(bits(&a), bits(&b));
    }
    let w = EnergyWeights {
        xi: 1.0,
        lambda: 0.5,
    };
    assert_eq!(
        energy::energy(&a, &w).unwrap().total().to_bits(),
        energy::energy(&b, &w).unwrap().total().to_bits()
    );
}

#[test]
fn engines_agree_in_two_dimensions() {
    let grid = Grid::rect(1.0, 1.0, 15, 15).unwrap();
    let k = RelaxationKernel::prony(&[(0.2, 0.5), (0.3, 3.0)]).unwrap();
    let init = InitialData {
        u0: Profile::Gaussian {
            center: vec![0.4, 0.6],
            width: 0.15,
            amplitude: 1.0,
        },
        ..InitialData::default()
    };
    let mut rec = setup(grid, k.clone(), 0.5, 0.02, &init);
    rec.engine = EngineMode::Recursive;
    let mut dir = setup(grid, k, 0.5, 0.02, &init);
    dir.engine = EngineMode::Direct;
    let mut a = Simulation::new(rec).unwrap();
    let mut b = Simulation::new(dir).unwrap();
    for _ in 0..300 {
        a.step().unwrap();
        b.step().unwrap();
        let (fa, fb) = (a.memory_force(), b.memory_force());
        let scale = fb.max_abs();
        for (x, y) in fa.values().iter().zip(fb.values()) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn zero_data_stays_zero() {
    let grid = Grid::rect(1.0, 1.0, 8, 8).unwrap();
    let init = InitialData {
        u0: Profile::Zero,
        ..InitialData::default()
    };
    let mut sim = Simulation::new(setup(
        grid,
        RelaxationKernel::prony(&[(0.5, 1.0)]).unwrap(),
        0.7,
        0.02,
        &init,
    ))
    .unwrap();
    for _ in 0..200 {
        sim.step().unwrap();
    }
    assert!(sim.state().u().values().iter().all(|&x| x == 0.0));
    assert!(sim.state().v().values().iter().all(|&x| x == 0.0));
}

#[test]
fn initial_velocity_is_reproduced() {
    let grid = Grid::line(1.0, 30).unwrap();
    let init = InitialData {
        u1: Profile::Sine {
            modes: vec![2],
            amplitude: 0.3,
        },
        ..InitialData::default()
    };
    let sim = Simulation::new(setup(grid, RelaxationKernel::Zero, 0.5, 0.01, &init)).unwrap();
    let v = sim.state().v();
    let expected = Profile::Sine {
        modes: vec![2],
        amplitude: 0.3,
    }
    .sample(&grid);
    assert_eq!(v.values(), expected.values());
}

#[test]
fn runs_are_deterministic() {
    let cfg = parse_config(include_str!("../configs/sin_delay.toml")).unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn damped_energy_decreases_in_two_dimensions() {
    let text = "a0 = 1\na1 = -0.4\nt_end = 10.0\noutput_every = 5\n[grid]\ndim = 2\nnx = 31\nny = 31\n[delay]\nform = \"sin\"\ntau = 0.6\namp = 0.1\nomega = 2.0\n[init]\nu0 = { form = \"gaussian\", center = [0.5, 0.5], width = 0.1 }\n";
    let cfg = parse_config(text).unwrap();
    let out = run(&cfg).unwrap();
    assert!(out.certificate.is_feasible());
    let m = check_monotone(&out.records, 1e-8);
    assert!(m.pass, "uptick {:e} at {:?}", m.max_uptick, m.at);
    assert!(out.final_energy().unwrap() < 0.05 * out.records[0].e);
    for r in &out.records {
        assert!(r.memory >= 0.0 && r.delay >= 0.0 && r.elastic >= 0.0);
    }
}

#[test]
fn two_dimensional_mode_converges_at_second_order() {
    // u = cos(√2 π t) sin(πx) sin(πy), sampled at a zero crossing of the time factor
    let omega = 2f64.sqrt() * PI;
    let t_end = 0.5 / 2f64.sqrt();
    let mut errors = Vec::new();
    for cells in [8usize, 16, 32] {
        let grid = Grid::rect(1.0, 1.0, cells - 1, cells - 1).unwrap();
        let steps = 4 * cells;
        let dt = t_end / steps as f64;
        let s = SimSetup::new(
            grid,
            RelaxationKernel::Zero,
            DelayProfile::constant(1.0).unwrap(),
            DampingPair::undamped(0.0),
            EngineMode::Recursive,
            dt,
            &InitialData {
                u0: Profile::Sine {
                    modes: vec![1, 1],
                    amplitude: 1.0,
                },
                ..InitialData::default()
            },
        );
        let mut sim = Simulation::new(s).unwrap();
        for _ in 0..steps {
            sim.step().unwrap();
        }
        let exact = grid.sample(|x, y| (omega * t_end).cos() * (PI * x).sin() * (PI * y).sin());
        let err = sim
            .state()
            .u()
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for w in errors.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&p), "{errors:?}");
    }
}

#[test]
fn delay_term_stays_resolved() {
    let grid = Grid::line(1.0, 10).unwrap();
    let delay = DelayProfile::constant(0.05).unwrap();
    let (dt, _) = choose_dt(&grid, 1.0, &delay, 1.0);
    assert!(dt <= 0.05 / 8.0);
    let s = SimSetup::new(
        grid,
        RelaxationKernel::Zero,
        delay,
        DampingPair::new(1.0, 0.5).unwrap(),
        EngineMode::Recursive,
        0.1,
        &InitialData::default(),
    );
    assert!(Simulation::new(s).is_err());
}

#[test]
fn recursive_engine_rejects_power_law() {
    let grid = Grid::line(1.0, 10).unwrap();
    let s = SimSetup::new(
        grid,
        RelaxationKernel::power_law(0.5, 2.0).unwrap(),
        DelayProfile::constant(1.0).unwrap(),
        DampingPair::new(1.0, 0.5).unwrap(),
        EngineMode::Recursive,
        0.01,
        &InitialData::default(),
    );
    assert!(matches!(
        Simulation::new(s),
        Err(vds::Error::InvalidKernel(_))
    ));
}

#[test]
fn certificate_weights_reach_the_energy() {
    let cfg = parse_config(include_str!("../configs/default.toml")).unwrap();
    let (dt, _) = choose_dt(&cfg.grid, cfg.solver.dt_safety, &cfg.delay, 1.0);
    let mut sim = Simulation::new(setup_for(&cfg, dt)).unwrap();
    for _ in 0..100 {
        sim.step().unwrap();
    }
    let cert = certify(&cfg.pair, &cfg.delay);
    let w = EnergyWeights {
        xi: cert.xi_chosen,
        lambda: cert.lambda_chosen,
    };
    let with = energy::energy(&sim, &w).unwrap();
    let without = energy::energy(
        &sim,
        &EnergyWeights {
            xi: 0.0,
            lambda: 0.0,
        },
    )
    .unwrap();
    assert!(with.delay > 0.0);
    assert_eq!(without.delay, 0.0);
    assert_eq!(with.kinetic, without.kinetic);
}
