use super::*;
use crate::grid::{ddx_central, integrate};

fn params() -> WaveParams {
    WaveParams::new(2.0, 0.0, 0.5, 0.5).unwrap()
}

fn config(cells: usize, t_end: f64) -> SolverConfig {
    let p = params();
    let g = Grid::symmetric(p.default_half_width(), cells).unwrap();
    let mut c = SolverConfig::new(p, g, t_end);
    c.perturbation = PerturbationSpec::gaussian(0.3, 0.2, 3.0, -2.0);
    c
}

#[test]
fn zero_perturbation_is_steady() {
    let mut c = config(256, 5.0);
    c.perturbation = PerturbationSpec::none();
    let out = run(c).unwrap();
    for r in &out.records {
        assert_eq!(r.x, 0.0);
        assert_eq!(r.x_dot, 0.0);
        assert_eq!(r.report.eta_weighted, 0.0);
        assert_eq!(r.report.y, 0.0);
        assert_eq!(r.report.i_good, 0.0);
    }
    assert!(out.verdict.contraction_held);
    assert_eq!(out.verdict.max_violation, 0.0);
    assert!(out.verdict.passed());
}

fn steady_drift(cells: usize, steps: usize) -> f64 {
    let mut c = config(cells, 1.0);
    c.well_balanced = false;
    c.perturbation = PerturbationSpec::none();
    let mut s = Solver::new(c).unwrap();
    let u0 = s.initial_state().unwrap();
    let dt = s.stable_dt(&u0);
    let mut n = u0.n().values().to_vec();
    let mut q = u0.q().values().to_vec();
    for k in 0..steps {
        s.step_in_place(&mut n, &mut q, dt, k as f64 * dt).unwrap();
    }
    n.iter()
        .zip(u0.n().values())
        .chain(q.iter().zip(u0.q().values()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn sampled_wave_drift_converges_at_second_order() {
    let coarse = steady_drift(256, 10_000);
    let fine = steady_drift(512, 10_000);
    let finer = steady_drift(1024, 10_000);
    assert!(coarse < 1e-2, "{coarse}");
    let p1 = (coarse / fine).log2();
    let p2 = (fine / finer).log2();
    assert!(p1 > 1.8 && p2 > 1.8, "{coarse} {fine} {finer}");
}

#[test]
fn well_balanced_wave_is_exact() {
    let mut c = config(256, 1.0);
    c.perturbation = PerturbationSpec::none();
    let mut s = Solver::new(c).unwrap();
    let u0 = s.initial_state().unwrap();
    let mut u = u0.clone();
    for k in 0..200 {
        u = s.step(&u, 0.05, k as f64 * 0.05).unwrap();
    }
    assert_eq!(u, u0);
}

#[test]
fn constant_state_is_preserved() {
    let p = params();
    let g = Grid::new(-3000.0, -2000.0, 200).unwrap();
    for mode in [DiffusionMode::Implicit, DiffusionMode::Explicit] {
        let mut c = SolverConfig::new(p, g, 1.0);
        c.well_balanced = false;
        c.diffusion_mode = mode;
        let mut s = Solver::new(c).unwrap();
        let u0 = State::from_values(g, vec![p.n_minus(); 201], vec![p.q_minus(); 201]).unwrap();
        let mut u = u0.clone();
        let dt = s.stable_dt(&u);
        for k in 0..100 {
            u = s.step(&u, dt, k as f64 * dt).unwrap();
        }
        assert_eq!(u, u0);
    }
}

#[test]
fn perturbation_mass_is_conserved() {
    for mode in [DiffusionMode::Implicit, DiffusionMode::Explicit] {
        let mut c = config(512, 4.0);
        c.diffusion_mode = mode;
        let mut s = Solver::new(c).unwrap();
        let g = s.grid();
        let wave = State::wave(&params(), g, 0.0);
        let mass = |u: &State| {
            let dn = integrate(&GridField::new(g, u.n().values().iter().zip(wave.n().values()).map(|(a, b)| a - b).collect()).unwrap());
            let dq = integrate(&GridField::new(g, u.q().values().iter().zip(wave.q().values()).map(|(a, b)| a - b).collect()).unwrap());
            (dn, dq)
        };
        let mut u = s.initial_state().unwrap();
        let m0 = mass(&u);
        let mut t = 0.0;
        while t < 4.0 {
            let dt = s.stable_dt(&u).min(4.0 - t);
            u = s.step(&u, dt, t).unwrap();
            t += dt;
        }
        let m1 = mass(&u);
        assert!((m1.0 - m0.0).abs() <= 1e-8 * t, "{mode:?} {m0:?} {m1:?}");
        assert!((m1.1 - m0.1).abs() <= 1e-8 * t, "{mode:?} {m0:?} {m1:?}");
    }
}

#[test]
fn explicit_and_implicit_diffusion_agree() {
    let finals: Vec<State> = [DiffusionMode::Implicit, DiffusionMode::Explicit]
        .into_iter()
        .map(|mode| {
            let mut c = config(512, 2.0);
            c.diffusion_mode = mode;
            c.fixed_dt = Some(0.01);
            run(c).unwrap().final_state
        })
        .collect();
    let gap = finals[0]
        .n()
        .values()
        .iter()
        .zip(finals[1].n().values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-4, "{gap}");
}

#[test]
fn oversized_step_reports_stability_error() {
    let mut c = config(256, 1.0);
    c.perturbation = PerturbationSpec::gaussian(1.5, 1.5, 1.0, 0.0);
    c.diffusion_mode = DiffusionMode::Explicit;
    c.fixed_dt = Some(5.0);
    match run(c) {
        Err(LabError::Stability { node, .. }) => assert!(node < 257),
        other => panic!("expected a stability error, got {other:?}"),
    }
}

#[test]
fn run_records_and_shift_bound() {
    let mut c = config(512, 3.0);
    c.report_stride = 5;
    c.snapshot_stride = Some(50);
    let out = run(c).unwrap();
    assert!(out.records.iter().all(|r| r.step % 5 == 0 || r.t == 3.0));
    assert_eq!(out.records.last().unwrap().t, 3.0);
    assert!(out.snapshots.len() >= 2);
    for r in &out.records {
        assert!(r.x_dot.abs() <= r.xdot_bound);
    }
    assert!(out.verdict.shift_bound_held);
    assert_eq!(
        out.verdict.lab_frame_shift,
        params().sigma() * 3.0 - out.shift.x
    );
}

#[test]
fn config_validation() {
    let base = config(256, 1.0);
    assert!(Solver::new(base.clone()).is_ok());
    for bad in [
        SolverConfig { cfl: 0.0, ..base.clone() },
        SolverConfig { cfl: 1.5, ..base.clone() },
        SolverConfig { t_end: -1.0, ..base.clone() },
        SolverConfig { delta1: 0.5, ..base.clone() },
        SolverConfig { fixed_dt: Some(0.0), ..base.clone() },
        SolverConfig { shift_substeps: 0, ..base.clone() },
    ] {
        assert!(Solver::new(bad).is_err());
    }
}

#[test]
fn concentration_reconstruction() {
    let g = Grid::new(-2.0, 3.0, 500).unwrap();
    let zero = GridField::constant(g, 0.0).unwrap();
    let c = reconstruct_concentration(&zero, 2.5).unwrap();
    assert!(c.values().iter().all(|&v| v == 2.5));

    let k = 0.7;
    let c = reconstruct_concentration(&GridField::constant(g, k).unwrap(), 1.5).unwrap();
    for (x, v) in g.nodes().zip(c.values()) {
        let exact = 1.5 * (-k * (x + 2.0)).exp();
        assert!((v - exact).abs() <= 1e-13 * exact);
    }
    assert!(reconstruct_concentration(&zero, 0.0).is_err());
}

#[test]
fn concentration_round_trip_is_second_order() {
    let err = |cells: usize| {
        let g = Grid::new(-5.0, 5.0, cells).unwrap();
        let q = GridField::from_fn(g, |x| x.sin() + 0.3 * x).unwrap();
        let c = reconstruct_concentration(&q, 1.0).unwrap();
        let back = ddx_central(&c.map(f64::ln).unwrap());
        back.values()
            .iter()
            .zip(q.values())
            .map(|(b, q)| (-b - q).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(200), err(400));
    assert!(e1 < 1e-2);
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}
