use std::sync::OnceLock;

use wingleg_core::config::{parse_config, parse_quantity, ConfigError, Dim, DEFAULT_SCENARIO};
use wingleg_core::gaits::{gait_to_joint_commands, gen_trajectory, GaitConfig, GaitMode};
use wingleg_core::io::*;
use wingleg_core::metrics::{energy_input, fixtures};
use wingleg_core::model::ContactMode;
use wingleg_core::params::RobotParams;
use wingleg_core::sim::{run_takeoff, summarize, EventKind, Scenario, TrajectoryLog};
use wingleg_core::Error;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn bundled_scenario_is_the_default() {
    let cfg = parse_config(DEFAULT_SCENARIO).unwrap();
    let (got, want) = (&cfg.scenario, Scenario::default());
    let (g, w) = (&got.params, &want.params);
    let pairs = [
        (g.l1, w.l1),
        (g.l2, w.l2),
        (g.l3, w.l3),
        (g.l4, w.l4),
        (g.theta3, w.theta3),
        (g.m_body, w.m_body),
        (g.m_upper, w.m_upper),
        (g.m_lower, w.m_lower),
        (g.m_palm, w.m_palm),
        (g.m_toe, w.m_toe),
        (g.body_length, w.body_length),
        (g.air_density, w.air_density),
        (g.wing_area, w.wing_area),
        (g.tail_area, w.tail_area),
        (g.wing_angle_offset, w.wing_angle_offset),
        (g.tail_angle_offset, w.tail_angle_offset),
        (g.thrust_angle_offset, w.thrust_angle_offset),
        (g.max_thrust, w.max_thrust),
        (g.ankle_spring, w.ankle_spring),
        (g.toe_spring, w.toe_spring),
        (g.ankle_rest_angle, w.ankle_rest_angle),
        (g.toe_rest_angle, w.toe_rest_angle),
        (g.wing_center.x, w.wing_center.x),
        (g.wing_center.y, w.wing_center.y),
        (g.tail_center.x, w.tail_center.x),
        (g.tail_center.y, w.tail_center.y),
        (g.body_com_offset.x, w.body_com_offset.x),
        (g.body_com_offset.y, w.body_com_offset.y),
        (g.gear_ratio, w.gear_ratio),
        (g.motor_max_speed, w.motor_max_speed),
        (g.motor_max_torque, w.motor_max_torque),
        (g.toe_deflection_max, w.toe_deflection_max),
        (g.gravity, w.gravity),
    ];
    for (i, (a, b)) in pairs.iter().enumerate() {
        assert!(close(*a, *b), "parameter #{i}: {a} vs {b}");
    }
    for k in 0..6 {
        assert!(close(got.initial.q[k], want.initial.q[k]));
    }
    assert_eq!(got.initial.qdot, want.initial.qdot);
    assert_eq!(got.initial_mode, want.initial_mode);
    assert_eq!(got.control, want.control);
    assert!(close(got.reference.direction.unwrap(), want.reference.direction.unwrap()));
    assert_eq!(got.reference.speed, want.reference.speed);
    assert_eq!(got.reference.accel, want.reference.accel);
    assert_eq!(got.reference.profile, want.reference.profile);
    assert_eq!(got.hold, want.hold);
    assert_eq!(got.thrust, want.thrust);
    assert_eq!(
        (got.duration, got.step, got.event_tolerance, got.log_rate, got.flight_window),
        (want.duration, want.step, want.event_tolerance, want.log_rate, want.flight_window)
    );
    assert_eq!(got.baumgarte, want.baumgarte);
    assert_eq!(got.integrator, want.integrator);
    assert_eq!(got.forces.aero.name(), want.forces.aero.name());
}

fn key_error(text: &str) -> (usize, String, String) {
    match parse_config(text).unwrap_err() {
        ConfigError::Key { line, key, message } => (line, key, message),
        e => panic!("expected a key error, got {e}"),
    }
}

#[test]
fn malformed_units_name_the_key() {
    let (line, key, msg) = key_error("[params]\n\nwing_area = \"0.18 m^3\"\n");
    assert_eq!((line, key.as_str()), (3, "params.wing_area"));
    assert!(msg.contains("m^3"), "{msg}");
    let (line, key, _) = key_error("[integration]\nstep = \"0.2 fortnights\"\n");
    assert_eq!((line, key.as_str()), (2, "integration.step"));
    let (_, key, _) = key_error("[controller]\nprofile = \"zigzag\"\n");
    assert_eq!(key, "controller.profile");
    let (_, key, _) = key_error("[gait]\nn_steps = 0\n");
    assert_eq!(key, "gait.n_steps");
    let (_, key, _) = key_error("[sweep]\nwingspan = [1, 2]\n");
    assert_eq!(key, "sweep.wingspan");
    let (_, key, msg) = key_error("version = 7\n");
    assert_eq!(key, "version");
    assert!(msg.contains('7'));
}

#[test]
fn physical_validation_failures_are_config_errors() {
    let err = parse_config("[integration]\nstep = \"10 ms\"\n").unwrap_err();
    assert!(matches!(err, ConfigError::Invalid(Error::InvalidInput(_))), "{err}");
    let err = parse_config("[thrust_schedule]\npoints = [[0.0, 0.5], [0.1, 1.5]]\n").unwrap_err();
    assert!(matches!(err, ConfigError::Key { .. }), "{err}");
}

#[test]
fn sections_override_defaults() {
    let text = r#"
[params]
gear_ratio = 25
ankle_spring_enabled = false
aero_model = "thin_airfoil_with_stall"

[initial_state]
contact_mode = "airborne"
clearance = "5 cm"

[controller]
direction = "auto"
priority = ["vertical", "pitch", "horizontal"]

[thrust_schedule]
points = [[0.0, 0.0], ["100 ms", 0.9]]

[gait]
mode = "forward_hop"
n_steps = 6
hip_delay = "20 ms"
tuck_x = "-5 cm"

[sweep]
gear_ratio = [15, 19.13, 25]
ankle_spring = ["3.207 N*mm/deg", "0 N*mm/deg"]
parallel = false

[metrics]
battery_voltage = "11.1 V"
"#;
    let cfg = parse_config(text).unwrap();
    let sc = &cfg.scenario;
    assert_eq!(sc.params.gear_ratio, 25.0);
    assert!(!sc.forces.ankle_spring);
    assert_eq!(sc.forces.aero.name(), "thin_airfoil_with_stall");
    assert_eq!(sc.initial_mode, ContactMode::Airborne);
    let standing = Scenario::default().initial;
    assert!((sc.initial.q[1] - standing.q[1] - 0.05).abs() < 1e-15);
    assert_eq!(sc.reference.direction, None);
    assert_eq!(sc.thrust.level(0.05), 0.0);
    assert_eq!(sc.thrust.level(0.1), 0.9);
    assert_eq!(cfg.gait.mode, GaitMode::ForwardHop);
    assert_eq!(cfg.gait.n_steps, Some(6));
    assert!((cfg.gait.hip_delay - 0.02).abs() < 1e-15);
    assert!((cfg.gait.tuck.x + 0.05).abs() < 1e-15);
    let sweep = cfg.sweep.unwrap();
    assert!(!sweep.parallel);
    assert_eq!(sweep.grid.cells().len(), 6);
    let ankle = &sweep.grid.axes.iter().find(|(k, _)| k == "ankle_spring").unwrap().1;
    assert!((ankle[0] - RobotParams::default().ankle_spring).abs() < 1e-12);
    assert_eq!(cfg.metrics.battery_voltage, Some(11.1));
}

#[test]
fn quantity_parser_rejects_wrong_dimensions() {
    assert!(parse_quantity("1 kg", Dim::Angle).is_err());
    assert!(parse_quantity("1 deg", Dim::Dimensionless).is_err());
    assert_eq!(parse_quantity("-0.28 m", Dim::Length).unwrap(), -0.28);
}

fn short_run() -> &'static (Scenario, TrajectoryLog) {
    static RUN: OnceLock<(Scenario, TrajectoryLog)> = OnceLock::new();
    RUN.get_or_init(|| {
        let sc = Scenario { duration: 0.25, ..Default::default() };
        let log = run_takeoff(&sc).unwrap();
        (sc, log)
    })
}

#[test]
fn trajectory_csv_round_trips() {
    let (_, log) = short_run();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, log).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), TRAJECTORY_HEADER);
    let rows = read_trajectory(buf.as_slice()).unwrap();
    assert_eq!(rows, trajectory_rows(log));
    let mut again = Vec::new();
    write_rows_again(&mut again, &rows);
    assert_eq!(again, buf);
}

fn write_rows_again(buf: &mut Vec<u8>, rows: &[TrajectoryRow]) {
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r).unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn events_csv_round_trips() {
    let (_, log) = short_run();
    let mut buf = Vec::new();
    write_events(&mut buf, log).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("t,kind\n"));
    let events = read_events(buf.as_slice()).unwrap();
    let want: Vec<(f64, EventKind)> = log.events.iter().map(|e| (e.t, e.kind)).collect();
    assert_eq!(events, want);
}

#[test]
fn joint_reference_csv_round_trips() {
    let p = RobotParams::default();
    let cfg = GaitConfig::default();
    let walk = gen_trajectory(GaitMode::Walk, &cfg, &p).unwrap();
    let r = gait_to_joint_commands(&walk, &p, walk.duration(), 500.0, Some(4), 0.01).unwrap();
    let mut buf = Vec::new();
    write_joint_reference(&mut buf, &r).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with(JOINT_REFERENCE_HEADER));
    let back = read_joint_reference(buf.as_slice()).unwrap();
    assert_eq!((back.t, back.q, back.qd), (r.t, r.q, r.qd));
}

#[test]
fn allometry_csv_round_trips() {
    let pairs = fixtures::allometry_pairs();
    let mut buf = Vec::new();
    write_allometry(&mut buf, &pairs).unwrap();
    assert_eq!(read_allometry(buf.as_slice()).unwrap(), pairs);
    assert!(read_allometry("mass,leg\n1,2\n".as_bytes()).is_err());
}

#[test]
fn power_logs_are_detected_by_header() {
    assert_eq!(detect_log_kind("t,V,I"), Some(LogKind::Electrical));
    assert_eq!(detect_log_kind(" t , I "), Some(LogKind::CurrentOnly));
    assert_eq!(detect_log_kind(TRAJECTORY_HEADER), Some(LogKind::Trajectory));
    assert_eq!(detect_log_kind("time,volts"), None);

    let vi = "t,V,I\n0,10,1\n1,10,1\n2,10,1\n";
    assert!((energy_input(&read_power_log(vi.as_bytes(), None).unwrap()).unwrap() - 20.0).abs() < 1e-12);
    let i_only = "t,I\n0,0\n2,1\n";
    assert!(read_power_log(i_only.as_bytes(), None).is_err());
    let e = energy_input(&read_power_log(i_only.as_bytes(), Some(10.0)).unwrap()).unwrap();
    assert!((e - 10.0).abs() < 1e-12);
    let backwards = "t,V,I\n0,10,1\n0,10,1\n";
    assert!(matches!(read_power_log(backwards.as_bytes(), None), Err(Error::NonMonotoneTime { index: 1 })));
}

#[test]
fn trajectory_report_agrees_with_the_run_summary() {
    let (sc, log) = short_run();
    let summary = summarize(log, sc).unwrap();
    let rows = trajectory_rows(log);
    let p = &sc.params;
    let rep = trajectory_report(&rows, Some(summary.takeoff_time), p.total_mass(), p.l1 + p.l2).unwrap();
    assert_eq!(rep.takeoff_time, summary.takeoff_time);
    assert!((rep.takeoff_speed - summary.takeoff_speed).abs() < 0.02, "{rep:?}");
    assert!((rep.energy_mech - summary.energy_mech).abs() < 1e-9 * summary.energy_mech.max(1.0) + 1e-12);
    assert!((rep.efficiency - summary.efficiency).abs() < 0.02);
    let coarse = trajectory_report(&rows, None, p.total_mass(), p.l1 + p.l2).unwrap();
    assert!(coarse.takeoff_time >= summary.takeoff_time);
    assert!(coarse.takeoff_time - summary.takeoff_time <= 1.0 / sc.log_rate + 1e-12);
}
