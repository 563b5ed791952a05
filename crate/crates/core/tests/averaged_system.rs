use std::f64::consts::PI;

use approx::assert_relative_eq;

use seek_core::analysis::{
    averaging_gap, certify, contracts_over_period, lbs_gains, lyapunov_derivative, lyapunov_value,
};
use seek_core::dynamics::{to_rotating, LbsSystem};
use seek_core::field::{ObjectiveField, QuadraticField};
use seek_core::sim::{integrate, IntegratorConfig};
use seek_core::{preset, run_scenario};

const OMEGA: f64 = 1.4;
const TARGET: (f64, f64) = (1.0, -2.0);

fn table1_lbs(t_end: f64, dt: f64) -> seek_core::Trajectory {
    let cfg = preset("table1").unwrap();
    let mut sys = LbsSystem::third_order(cfg.field, OMEGA, cfg.params.c, cfg.params.a);
    integrate(&mut sys, [1.6, -1.4], &IntegratorConfig::new(dt, t_end, 1)).unwrap()
}

#[test]
fn averaged_error_contracts_every_turn() {
    let traj = table1_lbs(20.0, 1e-3);
    assert!(contracts_over_period(&traj, TARGET, 2.0 * PI / OMEGA));
}

#[test]
fn lyapunov_derivative_matches_time_difference_of_v() {
    let (c1, c2) = lbs_gains(0.5, 0.5, 1.0, 1.0).unwrap();
    let gamma = certify(c1, c2, OMEGA).unwrap().gamma_feasible.unwrap();
    let dt = 1e-4;
    let traj = table1_lbs(2.0, dt);
    let v = |i: usize| {
        let s = &traj.samples[i];
        let r = to_rotating(s.x, s.y, TARGET, OMEGA, s.t);
        lyapunov_value(r.xi, r.eta, gamma)
    };
    for i in (1..traj.len() - 1).step_by(997) {
        let fd = (v(i + 1) - v(i - 1)) / (2.0 * dt);
        let s = &traj.samples[i];
        let r = to_rotating(s.x, s.y, TARGET, OMEGA, s.t);
        let analytic = lyapunov_derivative(r.xi, r.eta, s.t, c1, c2, OMEGA, gamma);
        assert_relative_eq!(analytic, fd, max_relative = 1e-5, epsilon = 1e-12);
        assert!(analytic < 0.0);
    }
}

#[test]
fn equal_gain_threshold_is_a_third_of_the_gain() {
    for c in [0.3, 1.5, 6.0] {
        let above = certify(c, c, 1.01 * c / 3.0).unwrap();
        assert_relative_eq!(above.omega_threshold.unwrap(), c / 3.0, max_relative = 1e-12);
        assert!(above.verdict);
        assert!(!certify(c, c, 0.99 * c / 3.0).unwrap().verdict);
    }
}

#[test]
fn quadratic_field_gives_no_third_order_drift() {
    let field = ObjectiveField::Quadratic(QuadraticField::new(1.0, 1.0, 1.0, -2.0));
    let mut sys = LbsSystem::third_order(field, OMEGA, 0.5, 0.5);
    let traj = integrate(&mut sys, [1.6, -1.4], &IntegratorConfig::new(1e-3, 5.0, 100)).unwrap();
    let last = traj.last().unwrap();
    assert_eq!((last.x, last.y), (1.6, -1.4));
}

#[test]
fn closed_loop_tracks_averaged_system() {
    let mut cfg = preset("table1").unwrap();
    cfg.sim.t_end = 3.0;
    let run = run_scenario(&cfg, true).unwrap();
    let gap = averaging_gap(&run.esc, run.lbs.as_ref().unwrap()).unwrap();
    assert!(gap < 0.05, "gap {gap}");
    // both moved toward the target
    let start = (0.6f64).hypot(0.6);
    assert!(run.esc.last().unwrap().error_norm(TARGET) < start);
}
