use nalgebra::{Vector2, Vector6};
use wingleg_core::control::RampProfile;
use wingleg_core::dynamics::ForceModel;
use wingleg_core::integrate::bisect;
use wingleg_core::model::{ContactMode, GeneralizedState};
use wingleg_core::sim::{
    run_flight, run_takeoff, summarize, sweep, EventKind, Scenario, SweepGrid, ThrustSchedule,
};

fn airborne(q: Vector6<f64>) -> Scenario {
    Scenario {
        initial: GeneralizedState::at_rest(q),
        initial_mode: ContactMode::Airborne,
        forces: ForceModel::passive(),
        thrust: ThrustSchedule::constant(0.0),
        ..Default::default()
    }
}

fn end_state(sc: &Scenario) -> Vector6<f64> {
    let log = run_takeoff(sc).unwrap();
    log.samples.last().unwrap().q
}

#[test]
fn free_fall_matches_closed_form() {
    let base = Scenario::default();
    let mut q = base.initial.q;
    q[5] = base.params.toe_rest_angle;
    let mut sc = airborne(q);
    sc.duration = 0.1;
    let end = end_state(&sc);
    assert!((end[1] - q[1] + 0.04905).abs() < 1e-9, "dy = {}", end[1] - q[1]);
    assert!((end[0] - q[0]).abs() < 1e-12);
}

/// Unpowered stance on a time-scheduled ramp with the toe stop and release
/// out of reach. The displacement schedule has a square-root start, which
/// caps the observed order, so it is not used here.
fn smooth_stance(step: f64) -> Scenario {
    let mut sc = Scenario { duration: 0.2, step, ..Default::default() };
    sc.params.toe_deflection_max = 1.2;
    sc.thrust = ThrustSchedule::constant(0.0);
    sc.reference.profile = RampProfile::Time;
    sc.reference.speed = 0.5;
    sc.reference.accel = 2.0;
    sc
}

#[test]
fn rk4_converges_at_fourth_order_in_stance() {
    let a = end_state(&smooth_stance(4e-4));
    let b = end_state(&smooth_stance(2e-4));
    let c = end_state(&smooth_stance(1e-4));
    let (e1, e2) = ((a - b).norm(), (b - c).norm());
    assert!(e2 < 1e-5);
    assert!(e1 / e2 > 12.0 && e1 / e2 < 20.0, "ratio {}", e1 / e2);
}

#[test]
fn bisection_localizes_a_linear_event() {
    let t_star = 0.123_456_789;
    let te = bisect(|t| Ok(t - t_star), 0.1, 0.2, 1e-6).unwrap();
    assert!(te >= t_star && te - t_star <= 1e-6);
}

#[test]
fn takeoff_log_is_well_formed() {
    let sc = Scenario::default();
    let log = run_takeoff(&sc).unwrap();
    assert!(log.samples.windows(2).all(|w| w[1].t > w[0].t));

    let kinds: Vec<EventKind> = log.events.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, vec![EventKind::ToeSaturation, EventKind::TakeOff, EventKind::Stop]);
    let sat = log.event(EventKind::ToeSaturation).unwrap().t;
    let to = log.takeoff().unwrap().t;
    assert!(sat < to && to < 0.4);

    let rank = |m: ContactMode| match m {
        ContactMode::FlatToe => 0,
        ContactMode::ToeTip => 1,
        ContactMode::Airborne => 2,
    };
    for w in log.samples.windows(2) {
        assert!(rank(w[1].mode) >= rank(w[0].mode));
        if w[1].mode != w[0].mode {
            assert!(log.events.iter().any(|e| e.t > w[0].t && e.t <= w[1].t));
        }
    }
    for s in log.samples.iter().filter(|s| s.mode.is_stance()) {
        assert!(s.constraint_drift < 1e-3);
        assert!(s.constraint_power < 1e-6, "constraint power {} at {}", s.constraint_power, s.t);
    }
    assert!(log.stats.max_constraint_drift < 1e-3);
}

#[test]
fn identical_scenarios_give_identical_logs() {
    let sc = Scenario { duration: 0.25, ..Default::default() };
    let a = run_takeoff(&sc).unwrap();
    let b = run_takeoff(&sc).unwrap();
    assert_eq!(a, b);
}

/// Largest CoM deviation from the projectile parabola once the propeller is cut.
fn ballistic_deviation(step: f64) -> f64 {
    let mut sc = Scenario { duration: 0.25, step, ..Default::default() };
    sc.forces.aero_enabled = false;
    let t_to = run_takeoff(&sc).unwrap().takeoff().unwrap().t;
    // Cut the propeller on the first log instant after launch.
    let t_cut = (t_to * sc.log_rate).ceil() / sc.log_rate;
    sc.thrust = ThrustSchedule { points: vec![(0.0, 0.9), (t_cut, 0.0)] };
    sc.flight_window = 0.3;
    let log = run_flight(&run_takeoff(&sc).unwrap(), &sc).unwrap();
    assert_eq!(log.takeoff().unwrap().t, t_to);
    let start = log.samples.iter().find(|s| (s.t - t_cut).abs() < 1e-9).unwrap();
    let g = sc.params.gravity;
    log.samples
        .iter()
        .filter(|s| s.t > t_cut)
        .map(|s| {
            let dt = s.t - start.t;
            let expect = start.com + start.com_velocity * dt - Vector2::new(0.0, 0.5 * g * dt * dt);
            (s.com - expect).norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn flight_without_aero_or_thrust_is_ballistic() {
    let coarse = ballistic_deviation(2e-4);
    let fine = ballistic_deviation(1e-4);
    assert!(fine < 1e-6, "ballistic deviation {fine:e}");
    assert!(coarse / fine > 8.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn hold_keeps_joints_near_targets_in_powered_flight() {
    let base = Scenario::default();
    let mut q = base.initial.q;
    q[5] = base.params.toe_rest_angle;
    let mut sc = airborne(q);
    sc.forces.aero_enabled = true;
    sc.thrust = ThrustSchedule::constant(0.9);
    sc.initial.qdot[0] = 2.0;
    sc.duration = 1.0;
    let log = run_takeoff(&sc).unwrap();
    let worst = log
        .samples
        .iter()
        .map(|s| (s.q[3] - q[3]).abs().max((s.q[4] - q[4]).abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "hold error {worst:e}");
}

#[test]
fn sweeps_are_deterministic_and_match_single_runs() {
    let sc = Scenario { duration: 0.2, ..Default::default() };
    let grid = SweepGrid::new(vec![("gear_ratio".into(), vec![15.0, 19.13, 25.0])]);
    let serial = sweep(&sc, &grid, false).unwrap();
    let parallel = sweep(&sc, &grid, true).unwrap();
    assert_eq!(serial, parallel);
    let feasible: Vec<bool> =
        serial.rows.iter().map(|r| r.summary.as_ref().unwrap().gear_feasible).collect();
    assert_eq!(feasible, vec![true, true, false]);

    let single = sweep(&sc, &SweepGrid::new(vec![("gear_ratio".into(), vec![19.13])]), false).unwrap();
    let direct = summarize(&run_takeoff(&sc).unwrap(), &sc).unwrap();
    assert_eq!(single.rows[0].summary.as_ref().unwrap(), &direct);
}

#[test]
fn empty_and_unknown_sweeps_are_rejected() {
    let sc = Scenario::default();
    assert!(sweep(&sc, &SweepGrid::new(vec![]), false).is_err());
    assert!(sweep(&sc, &SweepGrid::new(vec![("gear_ratio".into(), vec![])]), false).is_err());
    assert!(sweep(&sc, &SweepGrid::new(vec![("warp".into(), vec![1.0])]), false).is_err());
}

#[test]
fn failing_cells_are_recorded_and_the_sweep_continues() {
    let sc = Scenario { duration: 0.2, ..Default::default() };
    let grid = SweepGrid::new(vec![("step".into(), vec![-1.0, 2e-4])]);
    let table = sweep(&sc, &grid, true).unwrap();
    assert!(table.rows[0].error.is_some() && table.rows[0].summary.is_none());
    assert!(table.rows[1].summary.is_some());
}

#[test]
fn diverging_runs_report_the_last_good_state() {
    let mut sc = airborne(Scenario::default().initial.q);
    sc.duration = 0.05;
    sc.initial.qdot[3] = 1e200;
    let err = run_takeoff(&sc).unwrap_err();
    assert!(matches!(err, wingleg_core::Error::IntegrationDiverged { .. }), "{err}");
}
