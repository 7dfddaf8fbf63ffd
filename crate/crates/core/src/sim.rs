//! Hybrid simulation of the jumping take-off and the following flight.
//!
//! Stance runs in flat-toe mode until the toe joint reaches its deflection
//! stop, then pivots about the toe tip until the ground stops pushing. The
//! state vector integrated here is `[q, q̇, E_mech]` where `E_mech` is the
//! mechanical input work (see [`Simulation::input_power`]).

use std::sync::Arc;

use nalgebra::{DVector, Vector2, Vector6};
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{
    hold_torques, takeoff_controller, ControlConfig, HoldGains, TakeoffPlan, TakeoffReference,
};
use crate::dynamics::{
    active_constraints, constrained_accel, external_forces, flight_accel, project_velocity, Actuation, Baumgarte,
    ContactAnchor, ForceModel,
};
use crate::error::{Error, Result};
use crate::integrate::{bisect, integrators, Integrator};
use crate::metrics::{efficiency, energy_output, gear_ratio_bound};
use crate::model::{com_position, constraint_positions, ContactMode, GeneralizedState};
use crate::params::RobotParams;

const STATE_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    ToeSaturation,
    TakeOff,
    Touchdown,
    Stop,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ToeSaturation => "toe_saturation",
            EventKind::TakeOff => "take_off",
            EventKind::Touchdown => "touchdown",
            EventKind::Stop => "stop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "toe_saturation" => Some(EventKind::ToeSaturation),
            "take_off" => Some(EventKind::TakeOff),
            "touchdown" => Some(EventKind::Touchdown),
            "stop" => Some(EventKind::Stop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub state: GeneralizedState,
}

/// Piecewise-constant throttle: each `(t, level)` holds until the next entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThrustSchedule {
    pub points: Vec<(f64, f64)>,
}

impl ThrustSchedule {
    pub fn constant(level: f64) -> Self {
        Self { points: vec![(0.0, level)] }
    }

    pub fn level(&self, t: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(ti, _)| *ti <= t)
            .last()
            .map(|(_, l)| *l)
            .unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidInput("thrust schedule times must increase".into()));
            }
        }
        if let Some((_, l)) = self.points.iter().find(|(_, l)| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidInput(format!("thrust level {l} outside [0, 1]")));
        }
        Ok(())
    }
}

impl Default for ThrustSchedule {
    fn default() -> Self {
        Self::constant(0.9)
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub initial: GeneralizedState,
    pub initial_mode: ContactMode,
    pub params: RobotParams,
    pub forces: ForceModel,
    pub control: ControlConfig,
    pub reference: TakeoffReference,
    pub hold: HoldGains,
    pub thrust: ThrustSchedule,
    pub duration: f64,
    pub step: f64,
    pub event_tolerance: f64,
    pub log_rate: f64,
    pub baumgarte: Baumgarte,
    pub integrator: String,
    /// Post-launch window covered by `run_flight` (s).
    pub flight_window: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        let params = RobotParams::default();
        let deg = std::f64::consts::PI / 180.0;
        let initial = GeneralizedState::standing(10.0 * deg, 135.0 * deg, 145.0 * deg, 25.0 * deg, &params);
        Self {
            name: "takeoff".into(),
            initial,
            initial_mode: ContactMode::FlatToe,
            params,
            forces: ForceModel::default(),
            control: ControlConfig::default(),
            reference: TakeoffReference::default(),
            hold: HoldGains::default(),
            thrust: ThrustSchedule::default(),
            duration: 0.5,
            step: 2e-4,
            event_tolerance: 1e-6,
            log_rate: 1000.0,
            baumgarte: Baumgarte::default(),
            integrator: "rk4".into(),
            flight_window: 1.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.control.validate()?;
        self.thrust.validate()?;
        if !(self.duration > 0.0) {
            return Err(Error::InvalidInput(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.step > 0.0 && self.step <= 5e-3) {
            return Err(Error::InvalidInput(format!("step must be in (0, 5e-3], got {}", self.step)));
        }
        if !(self.event_tolerance > 0.0) || !(self.log_rate > 0.0) {
            return Err(Error::InvalidInput("event tolerance and log rate must be > 0".into()));
        }
        if !(self.reference.accel > 0.0 && self.reference.speed > 0.0) {
            return Err(Error::InvalidInput("reference speed and acceleration must be > 0".into()));
        }
        if !self.initial.is_finite() {
            return Err(Error::InvalidInput("initial state must be finite".into()));
        }
        integrators().create(&self.integrator)?;
        Ok(())
    }

    /// Sets a numeric field by its sweep name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let p = &mut self.params;
        match key {
            "gear_ratio" => p.gear_ratio = value,
            "motor_max_torque" => p.motor_max_torque = value,
            "ankle_spring" => p.ankle_spring = value,
            "toe_spring" => p.toe_spring = value,
            "ankle_rest_angle" => p.ankle_rest_angle = value,
            "toe_deflection_max" => p.toe_deflection_max = value,
            "body_mass" => p.m_body = value,
            "max_thrust" => p.max_thrust = value,
            "thrust_level" => self.thrust = ThrustSchedule::constant(value),
            "takeoff_speed" => self.reference.speed = value,
            "ramp_accel" => self.reference.accel = value,
            "pitch_reference" => self.reference.pitch = value,
            "step" => self.step = value,
            "duration" => self.duration = value,
            _ => {
                return Err(Error::UnknownStrategy {
                    kind: "sweep parameter",
                    name: key.to_string(),
                    available: SWEEP_KEYS.join(", "),
                })
            }
        }
        Ok(())
    }
}

pub const SWEEP_KEYS: [&str; 14] = [
    "gear_ratio",
    "motor_max_torque",
    "ankle_spring",
    "toe_spring",
    "ankle_rest_angle",
    "toe_deflection_max",
    "body_mass",
    "max_thrust",
    "thrust_level",
    "takeoff_speed",
    "ramp_accel",
    "pitch_reference",
    "step",
    "duration",
];

/// One logged sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub q: Vector6<f64>,
    pub qdot: Vector6<f64>,
    pub qddot: Vector6<f64>,
    pub tau: Vector2<f64>,
    /// Net ground reaction on the robot (N).
    pub contact_force: Vector2<f64>,
    pub mode: ContactMode,
    pub com: Vector2<f64>,
    pub com_velocity: Vector2<f64>,
    /// `Σ |τ_j ω_j|` (W).
    pub power: f64,
    /// Cumulative actuator work (J).
    pub energy: f64,
    /// Largest distance of an active contact point from its anchor (m).
    pub constraint_drift: f64,
    /// `|q̇ᵀ Jᵀ λ|` of the enforced contact rows (W).
    pub constraint_power: f64,
}

impl Sample {
    pub fn state(&self) -> GeneralizedState {
        GeneralizedState::new(self.q, self.qdot)
    }
}

/// Extremes tracked at every integration step (not just at log samples).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StanceStats {
    /// Peak |q̇4|, |q̇5| before take-off (rad/s).
    pub peak_joint_speed: [f64; 2],
    /// Peak |τ| before take-off (N·m).
    pub peak_torque: [f64; 2],
    pub max_constraint_drift: f64,
    pub max_constraint_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub stats: StanceStats,
    /// Energy state at the end of the log.
    pub final_energy: f64,
}

impl TrajectoryLog {
    pub fn event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn takeoff(&self) -> Option<&Event> {
        self.event(EventKind::TakeOff)
    }
}

/// Headline numbers of a take-off run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TakeoffSummary {
    pub takeoff_time: f64,
    pub takeoff_speed: f64,
    pub takeoff_velocity: [f64; 2],
    pub takeoff_pitch: f64,
    pub takeoff_pitch_rate: f64,
    /// CoM rise between t = 0 and take-off (m).
    pub takeoff_rise: f64,
    pub toe_saturation_time: Option<f64>,
    /// Peak joint speed over both joints before take-off (rad/s).
    pub peak_joint_speed: f64,
    pub peak_torque: f64,
    pub energy_mech: f64,
    pub energy_out: f64,
    pub efficiency: f64,
    /// Largest gear ratio that still reaches the peak joint speed.
    pub gear_ratio_bound: f64,
    pub gear_feasible: bool,
    /// Highest CoM altitude above the take-off point within the log (m).
    pub apex_rise: f64,
}

/// Active phase: contact mode plus what the mode needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub mode: ContactMode,
    pub anchor: Option<ContactAnchor>,
    /// Joint-hold target in flight.
    pub hold: Vector2<f64>,
}

/// Dynamics evaluated at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub qddot: Vector6<f64>,
    pub tau: Vector2<f64>,
    pub contact_force: Vector2<f64>,
    pub constraint_power: f64,
}

pub fn detect_events(
    state: &GeneralizedState,
    contact_force: &Vector2<f64>,
    mode: ContactMode,
    params: &RobotParams,
    t: f64,
    duration: f64,
) -> Option<EventKind> {
    if mode == ContactMode::FlatToe && state.q[5] > params.toe_deflection_max {
        return Some(EventKind::ToeSaturation);
    }
    if mode.is_stance() && contact_force.y <= 0.0 {
        return Some(EventKind::TakeOff);
    }
    if t >= duration {
        return Some(EventKind::Stop);
    }
    None
}

fn pack(state: &GeneralizedState, energy: f64) -> DVector<f64> {
    let mut y = DVector::zeros(STATE_LEN);
    y.rows_mut(0, 6).copy_from(&state.q);
    y.rows_mut(6, 6).copy_from(&state.qdot);
    y[12] = energy;
    y
}

fn unpack(y: &DVector<f64>) -> GeneralizedState {
    GeneralizedState::new(
        Vector6::from_iterator(y.rows(0, 6).iter().copied()),
        Vector6::from_iterator(y.rows(6, 6).iter().copied()),
    )
}

/// Outcome of one (possibly event-truncated) step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub t: f64,
    pub y: DVector<f64>,
    pub event: Option<EventKind>,
}

pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    pub plan: TakeoffPlan,
    integrator: Arc<dyn Integrator>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            scenario,
            plan: TakeoffPlan::new(&scenario.reference, &scenario.initial, &scenario.params),
            integrator: integrators().create(&scenario.integrator)?,
        })
    }

    fn actuation(&self, t: f64) -> Actuation {
        Actuation { thrust_level: self.scenario.thrust.level(t), ..Default::default() }
    }

    /// External forces the stance controller is configured to account for.
    fn known_forces(&self, state: &GeneralizedState, u: &Actuation) -> Vector6<f64> {
        let sc = self.scenario;
        let mut known = Vector6::zeros();
        if sc.control.thrust_compensation {
            let thrust_only = ForceModel {
                aero_enabled: false,
                ankle_spring: false,
                toe_spring: false,
                ..sc.forces.clone()
            };
            known += external_forces(state, u, &sc.params, &thrust_only, true).generalized;
        }
        if sc.control.spring_compensation {
            let ext = external_forces(state, &Actuation::default(), &sc.params, &sc.forces, true);
            known[4] += ext.ankle_torque;
        }
        known
    }

    pub fn evaluate(&self, t: f64, state: &GeneralizedState, phase: &Phase) -> Result<Evaluation> {
        let sc = self.scenario;
        let p = &sc.params;
        let u = self.actuation(t);
        if phase.mode == ContactMode::Airborne {
            let tau = hold_torques(state, &phase.hold, sc.hold, p);
            return Ok(Evaluation {
                qddot: flight_accel(state, &tau, &u, p, &sc.forces)?,
                tau,
                contact_force: Vector2::zeros(),
                constraint_power: 0.0,
            });
        }
        let anchor = phase.anchor.as_ref();
        let ctrl = takeoff_controller(
            t,
            state,
            p,
            &sc.control,
            &self.plan,
            phase.mode,
            anchor,
            sc.baumgarte,
            &self.known_forces(state, &u),
        )?;
        let sol = constrained_accel(state, &ctrl.tau, &u, p, &sc.forces, phase.mode, anchor, sc.baumgarte)?;
        let ac = active_constraints(state, p, phase.mode, anchor)?;
        let rows = ac.contact_rows;
        let v = &ac.j * state.qdot;
        let power = v.rows(0, rows).dot(&sol.multipliers.rows(0, rows));
        Ok(Evaluation {
            qddot: sol.qddot,
            tau: ctrl.tau,
            contact_force: sol.net_force(),
            constraint_power: power.abs(),
        })
    }

    /// Mechanical input power: absolute actuator power plus the positive part
    /// of propeller, aerodynamic and spring power (nothing is regenerated).
    pub fn input_power(&self, t: f64, s: &GeneralizedState, tau: &Vector2<f64>, phase: &Phase) -> f64 {
        let sc = self.scenario;
        let u = self.actuation(t);
        let in_stance = phase.mode.is_stance();
        let ext = external_forces(s, &u, &sc.params, &sc.forces, in_stance);
        let thrust_only = ForceModel {
            aero_enabled: false,
            ankle_spring: false,
            toe_spring: false,
            ..sc.forces.clone()
        };
        let prop = external_forces(s, &u, &sc.params, &thrust_only, in_stance).generalized.dot(&s.qdot);
        let spring = ext.ankle_torque * s.qdot[4] + ext.toe_torque * s.qdot[5];
        let aero = ext.generalized.dot(&s.qdot) - prop - spring;
        (tau[0] * s.qdot[3]).abs()
            + (tau[1] * s.qdot[4]).abs()
            + prop.max(0.0)
            + aero.max(0.0)
            + spring.max(0.0)
    }

    fn derivative(&self, t: f64, y: &DVector<f64>, phase: &Phase) -> Result<DVector<f64>> {
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationDiverged { t, last_good: Box::default() });
        }
        let s = unpack(y);
        let ev = self.evaluate(t, &s, phase)?;
        let mut d = DVector::zeros(STATE_LEN);
        d.rows_mut(0, 6).copy_from(&s.qdot);
        d.rows_mut(6, 6).copy_from(&ev.qddot);
        d[12] = self.input_power(t, &s, &ev.tau, phase);
        Ok(d)
    }

    fn advance(&self, t: f64, y: &DVector<f64>, h: f64, phase: &Phase) -> Result<DVector<f64>> {
        let mut f = |t: f64, y: &DVector<f64>| self.derivative(t, y, phase);
        let diverged = || Error::IntegrationDiverged { t, last_good: y.as_slice().into() };
        match self.integrator.advance(&mut f, t, y, h) {
            Ok(y1) if y1.iter().all(|v| v.is_finite()) => Ok(y1),
            Ok(_) | Err(Error::IntegrationDiverged { .. }) => Err(diverged()),
            Err(e) => Err(e),
        }
    }

    /// Event function: crosses from `≤ 0` to `> 0` when the event fires.
    fn event_value(&self, kind: EventKind, t: f64, y: &DVector<f64>, phase: &Phase) -> Result<f64> {
        let s = unpack(y);
        Ok(match kind {
            EventKind::ToeSaturation => s.q[5] - self.scenario.params.toe_deflection_max,
            EventKind::TakeOff => {
                let f = self.evaluate(t, &s, phase)?.contact_force.y;
                // `fc_y ≤ 0` counts as released.
                if f <= 0.0 {
                    f64::MIN_POSITIVE.max(-f)
                } else {
                    -f
                }
            }
            EventKind::Touchdown | EventKind::Stop => -1.0,
        })
    }

    fn watched(&self, phase: &Phase) -> &'static [EventKind] {
        match phase.mode {
            ContactMode::FlatToe => &[EventKind::ToeSaturation, EventKind::TakeOff],
            ContactMode::ToeTip => &[EventKind::TakeOff],
            ContactMode::Airborne => &[],
        }
    }

    /// One integration step of at most `h`, truncated at the earliest event.
    pub fn step(&self, t: f64, y: &DVector<f64>, phase: &Phase, h: f64) -> Result<StepOutcome> {
        let y1 = self.advance(t, y, h, phase)?;
        let mut first: Option<(f64, EventKind)> = None;
        for &kind in self.watched(phase) {
            if self.event_value(kind, t + h, &y1, phase)? > 0.0 {
                let te = bisect(
                    |s| {
                        let ys = self.advance(t, y, s - t, phase)?;
                        self.event_value(kind, s, &ys, phase)
                    },
                    t,
                    t + h,
                    self.scenario.event_tolerance,
                )?;
                if first.is_none_or(|(tf, _)| te < tf) {
                    first = Some((te, kind));
                }
            }
        }
        match first {
            Some((te, kind)) if te < t + h => Ok(StepOutcome {
                t: te,
                y: self.advance(t, y, te - t, phase)?,
                event: Some(kind),
            }),
            Some((_, kind)) => Ok(StepOutcome { t: t + h, y: y1, event: Some(kind) }),
            None => Ok(StepOutcome { t: t + h, y: y1, event: None }),
        }
    }

    pub fn initial_phase(&self) -> Result<Phase> {
        let sc = self.scenario;
        let anchor = if sc.initial_mode.is_stance() {
            Some(ContactAnchor::at(&sc.initial, &sc.params, sc.initial_mode)?)
        } else {
            None
        };
        Ok(Phase {
            mode: sc.initial_mode,
            anchor,
            hold: Vector2::new(sc.initial.q[3], sc.initial.q[4]),
        })
    }

    fn sample(&self, t: f64, y: &DVector<f64>, phase: &Phase) -> Result<Sample> {
        let s = unpack(y);
        let ev = self.evaluate(t, &s, phase)?;
        let com = com_position(&s, &self.scenario.params);
        Ok(Sample {
            t,
            q: s.q,
            qdot: s.qdot,
            qddot: ev.qddot,
            tau: ev.tau,
            contact_force: ev.contact_force,
            mode: phase.mode,
            com: com.position,
            com_velocity: com.velocity,
            power: self.input_power(t, &s, &ev.tau, phase),
            energy: y[12],
            constraint_drift: self.drift(&s, phase)?,
            constraint_power: ev.constraint_power,
        })
    }

    fn drift(&self, s: &GeneralizedState, phase: &Phase) -> Result<f64> {
        let Some(anchor) = &phase.anchor else {
            return Ok(0.0);
        };
        let d = constraint_positions(s, &self.scenario.params, phase.mode)? - &anchor.points;
        Ok((0..d.len() / 2)
            .map(|i| (d[2 * i].powi(2) + d[2 * i + 1].powi(2)).sqrt())
            .fold(0.0, f64::max))
    }

    /// Applies the mode switch for `kind` at the post-event state.
    fn switch(&self, kind: EventKind, y: &mut DVector<f64>, phase: &mut Phase) -> Result<()> {
        let p = &self.scenario.params;
        let mut s = unpack(y);
        match kind {
            EventKind::ToeSaturation => {
                let mut anchor = ContactAnchor::at(&s, p, ContactMode::ToeTip)?;
                // The claw keeps its original ground point.
                if let Some(old) = &phase.anchor {
                    anchor.points = old.points.rows(2, 2).into_owned();
                }
                let ac = active_constraints(&s, p, ContactMode::ToeTip, Some(&anchor))?;
                s.qdot = project_velocity(&s, p, &ac)?;
                *phase = Phase { mode: ContactMode::ToeTip, anchor: Some(anchor), hold: phase.hold };
            }
            EventKind::TakeOff => {
                *phase = Phase {
                    mode: ContactMode::Airborne,
                    anchor: None,
                    hold: Vector2::new(s.q[3], s.q[4]),
                };
            }
            EventKind::Touchdown | EventKind::Stop => {}
        }
        let e = y[12];
        *y = pack(&s, e);
        Ok(())
    }

    /// Integrates from `(t, y, phase)` to `t_end`, appending to `log`.
    pub fn run_until(
        &self,
        t0: f64,
        y0: DVector<f64>,
        mut phase: Phase,
        t_end: f64,
        log: &mut TrajectoryLog,
    ) -> Result<(DVector<f64>, Phase)> {
        let sc = self.scenario;
        let dt_log = 1.0 / sc.log_rate;
        let mut t = t0;
        let mut y = y0;
        let mut k = (t0 * sc.log_rate).round() as u64;
        if log.samples.is_empty() {
            log.samples.push(self.sample(t, &y, &phase)?);
        }
        let eps = 1e-12;
        while t < t_end - eps {
            let next_log = ((k + 1) as f64 * dt_log).min(t_end);
            while t < next_log - eps {
                let h = sc.step.min(next_log - t);
                let out = self.step(t, &y, &phase, h)?;
                t = out.t;
                y = out.y;
                if phase.mode.is_stance() {
                    self.track(&mut log.stats, t, &y, &phase)?;
                }
                if let Some(kind) = out.event {
                    self.switch(kind, &mut y, &mut phase)?;
                    log.events.push(Event { kind, t, state: unpack(&y) });
                }
            }
            k += 1;
            if (k as f64 * dt_log - t).abs() < 1e-9 {
                log.samples.push(self.sample(t, &y, &phase)?);
            }
        }
        log.final_energy = y[12];
        Ok((y, phase))
    }

    fn track(&self, stats: &mut StanceStats, t: f64, y: &DVector<f64>, phase: &Phase) -> Result<()> {
        let s = unpack(y);
        let ev = self.evaluate(t, &s, phase)?;
        for j in 0..2 {
            stats.peak_joint_speed[j] = stats.peak_joint_speed[j].max(s.qdot[3 + j].abs());
            stats.peak_torque[j] = stats.peak_torque[j].max(ev.tau[j].abs());
        }
        stats.max_constraint_drift = stats.max_constraint_drift.max(self.drift(&s, phase)?);
        stats.max_constraint_power = stats.max_constraint_power.max(ev.constraint_power);
        Ok(())
    }
}

/// Stance under the take-off controller, then joint-held flight, through `duration`.
pub fn run_takeoff(scenario: &Scenario) -> Result<TrajectoryLog> {
    let sim = Simulation::new(scenario)?;
    let mut log = TrajectoryLog {
        samples: Vec::new(),
        events: Vec::new(),
        stats: StanceStats::default(),
        final_energy: 0.0,
    };
    let y0 = pack(&scenario.initial, 0.0);
    let phase = sim.initial_phase()?;
    let (y, _) = sim.run_until(0.0, y0, phase, scenario.duration, &mut log)?;
    log.events.push(Event { kind: EventKind::Stop, t: scenario.duration, state: unpack(&y) });
    Ok(log)
}

/// Extends a take-off log through `flight_window` seconds after launch.
pub fn run_flight(log: &TrajectoryLog, scenario: &Scenario) -> Result<TrajectoryLog> {
    let takeoff = log
        .takeoff()
        .ok_or_else(|| Error::InvalidInput("log has no take-off event".into()))?
        .clone();
    let t_end = takeoff.t + scenario.flight_window;
    let last = log.samples.last().ok_or_else(|| Error::InvalidInput("empty log".into()))?;
    let mut out = log.clone();
    if last.t >= t_end - 1e-12 {
        return Ok(out);
    }
    out.events.retain(|e| e.kind != EventKind::Stop);
    let sim = Simulation::new(scenario)?;
    let phase = Phase {
        mode: ContactMode::Airborne,
        anchor: None,
        hold: Vector2::new(takeoff.state.q[3], takeoff.state.q[4]),
    };
    let y0 = pack(&last.state(), log.final_energy);
    let (y, _) = sim.run_until(last.t, y0, phase, t_end, &mut out)?;
    out.events.push(Event { kind: EventKind::Stop, t: t_end, state: unpack(&y) });
    Ok(out)
}

pub fn summarize(log: &TrajectoryLog, scenario: &Scenario) -> Result<TakeoffSummary> {
    let p = &scenario.params;
    let to = log
        .takeoff()
        .ok_or_else(|| Error::InvalidInput("no take-off within the simulated duration".into()))?;
    let com = com_position(&to.state, p);
    let com0 = com_position(&scenario.initial, p).position;
    let rise = com.position.y - com0.y;
    let speed = com.velocity.norm();
    // Actuator work at the take-off instant, interpolated between samples.
    let energy = interpolate_energy(log, to.t);
    let e_out = energy_output(p.total_mass(), speed, rise);
    let peak = log.stats.peak_joint_speed[0].max(log.stats.peak_joint_speed[1]);
    let bound = gear_ratio_bound(p.motor_max_speed, peak);
    let apex = log
        .samples
        .iter()
        .filter(|s| s.t >= to.t)
        .map(|s| s.com.y - com.position.y)
        .fold(0.0, f64::max);
    Ok(TakeoffSummary {
        takeoff_time: to.t,
        takeoff_speed: speed,
        takeoff_velocity: [com.velocity.x, com.velocity.y],
        takeoff_pitch: to.state.q[2],
        takeoff_pitch_rate: to.state.qdot[2],
        takeoff_rise: rise,
        toe_saturation_time: log.event(EventKind::ToeSaturation).map(|e| e.t),
        peak_joint_speed: peak,
        peak_torque: log.stats.peak_torque[0].max(log.stats.peak_torque[1]),
        energy_mech: energy,
        energy_out: e_out,
        efficiency: efficiency(e_out, energy).unwrap_or(f64::NAN),
        gear_ratio_bound: bound,
        gear_feasible: p.gear_ratio <= bound,
        apex_rise: apex,
    })
}

fn interpolate_energy(log: &TrajectoryLog, t: f64) -> f64 {
    let s = &log.samples;
    match s.iter().position(|x| x.t >= t) {
        Some(0) => s[0].energy,
        Some(i) => {
            let (a, b) = (&s[i - 1], &s[i]);
            a.energy + (b.energy - a.energy) * (t - a.t) / (b.t - a.t)
        }
        None => log.final_energy,
    }
}

/// Take-off runs with and without the ankle spring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpringComparison {
    pub with_spring: TakeoffSummary,
    pub without_spring: TakeoffSummary,
    /// Relative speed gain from the spring.
    pub speed_gain: f64,
}

pub fn spring_comparison(scenario: &Scenario) -> Result<SpringComparison> {
    let mut on = scenario.clone();
    on.forces.ankle_spring = true;
    let mut off = scenario.clone();
    off.forces.ankle_spring = false;
    let (a, b) = rayon::join(|| run_takeoff(&on), || run_takeoff(&off));
    let with_spring = summarize(&a?, &on)?;
    let without_spring = summarize(&b?, &off)?;
    let speed_gain = with_spring.takeoff_speed / without_spring.takeoff_speed - 1.0;
    Ok(SpringComparison { with_spring, without_spring, speed_gain })
}

/// Named axes of a full-factorial sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub axes: Vec<(String, Vec<f64>)>,
}

impl SweepGrid {
    pub fn new(axes: Vec<(String, Vec<f64>)>) -> Self {
        Self { axes }
    }

    /// Cells in row-major order (last axis fastest).
    pub fn cells(&self) -> Vec<Vec<(String, f64)>> {
        let mut cells: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((name.clone(), *v));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub values: Vec<(String, f64)>,
    pub summary: Option<TakeoffSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

fn run_cell(template: &Scenario, values: &[(String, f64)]) -> SweepRow {
    let result = (|| {
        let mut sc = template.clone();
        for (k, v) in values {
            sc.set(k, *v)?;
        }
        let log = run_takeoff(&sc)?;
        summarize(&log, &sc)
    })();
    match result {
        Ok(s) => SweepRow { values: values.to_vec(), summary: Some(s), error: None },
        Err(e) => SweepRow { values: values.to_vec(), summary: None, error: Some(e.to_string()) },
    }
}

/// Runs every grid cell; failures are recorded per row.
pub fn sweep(template: &Scenario, grid: &SweepGrid, parallel: bool) -> Result<SweepTable> {
    let cells = grid.cells();
    if grid.axes.is_empty() || cells.is_empty() || grid.axes.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    for (k, _) in &grid.axes {
        template.clone().set(k, 0.0)?;
    }
    let rows = if parallel {
        cells.par_iter().map(|c| run_cell(template, c)).collect()
    } else {
        cells.iter().map(|c| run_cell(template, c)).collect()
    };
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thrust_schedule_steps() {
        let s = ThrustSchedule { points: vec![(0.0, 0.2), (0.1, 0.9)] };
        assert_eq!(s.level(0.05), 0.2);
        assert_eq!(s.level(0.1), 0.9);
        assert_eq!(ThrustSchedule { points: vec![(0.5, 1.0)] }.level(0.1), 0.0);
        assert!(ThrustSchedule { points: vec![(0.0, 1.5)] }.validate().is_err());
    }

    #[test]
    fn event_thresholds() {
        let p = RobotParams::default();
        let mut s = Scenario::default().initial;
        let up = Vector2::new(0.0, 5.0);
        assert_eq!(detect_events(&s, &up, ContactMode::FlatToe, &p, 0.1, 1.0), None);
        s.q[5] = p.toe_deflection_max - 1e-9;
        assert_eq!(detect_events(&s, &up, ContactMode::FlatToe, &p, 0.1, 1.0), None);
        s.q[5] = p.toe_deflection_max + 1e-9;
        assert_eq!(
            detect_events(&s, &up, ContactMode::FlatToe, &p, 0.1, 1.0),
            Some(EventKind::ToeSaturation)
        );
        assert_eq!(detect_events(&s, &up, ContactMode::ToeTip, &p, 0.1, 1.0), None);
        let down = Vector2::new(0.0, -0.1);
        assert_eq!(
            detect_events(&s, &down, ContactMode::ToeTip, &p, 0.1, 1.0),
            Some(EventKind::TakeOff)
        );
        assert_eq!(
            detect_events(&s, &down, ContactMode::Airborne, &p, 1.0, 1.0),
            Some(EventKind::Stop)
        );
    }

    #[test]
    fn grid_cells_row_major() {
        let g = SweepGrid::new(vec![("a".into(), vec![1.0, 2.0]), ("b".into(), vec![3.0, 4.0, 5.0])]);
        let c = g.cells();
        assert_eq!(c.len(), 6);
        assert_eq!(c[1], vec![("a".to_string(), 1.0), ("b".to_string(), 4.0)]);
    }

    #[test]
    fn unknown_sweep_key() {
        let mut s = Scenario::default();
        assert!(matches!(s.set("wingspan", 1.0), Err(Error::UnknownStrategy { .. })));
    }
}
