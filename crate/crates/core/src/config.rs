//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[params]`,
//! `[initial_state]`, `[controller]`, `[thrust_schedule]`, `[integration]`,
//! `[gait]`, `[sweep]` and `[metrics]`, all optional. Physical quantities are
//! either bare numbers in SI units or strings of the form `"<value> <unit>"`,
//! for example `theta3 = "45 deg"` or `ankle_spring_constant = "3.207 N*mm/deg"`.
//! Every error names the offending key and the line it sits on.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::Vector2;
use serde::Deserialize;
use thiserror::Error;
use toml::{Spanned, Value};

use crate::aero::aero_models;
use crate::control::{RampProfile, TaskId};
use crate::gaits::{GaitConfig, GaitMode};
use crate::model::{ContactMode, GeneralizedState};
use crate::params::GRAVITY;
use crate::sim::{Scenario, SweepGrid, ThrustSchedule, SWEEP_KEYS};

pub const FORMAT_VERSION: i64 = 1;

/// The bundled take-off scenario; parses to [`Scenario::default`].
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/takeoff.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: key '{key}': {message}")]
    Key { line: usize, key: String, message: String },

    #[error("invalid scenario: {0}")]
    Invalid(#[from] crate::Error),
}

type Section = BTreeMap<String, Spanned<Value>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<Spanned<i64>>,
    name: Option<String>,
    params: Option<Section>,
    initial_state: Option<Section>,
    controller: Option<Section>,
    thrust_schedule: Option<Section>,
    integration: Option<Section>,
    gait: Option<Section>,
    sweep: Option<Section>,
    metrics: Option<Section>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub parallel: bool,
}

/// Inputs for metrics on ingested logs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsConfig {
    /// Average battery voltage for current-only logs (V).
    pub battery_voltage: Option<f64>,
    /// Robot mass for energy output and cost of transport (kg).
    pub body_mass: Option<f64>,
    /// Hip height for the Froude number (m).
    pub leg_length: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub scenario: Scenario,
    pub gait: GaitConfig,
    pub sweep: Option<SweepSpec>,
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Mass,
    Angle,
    AngularRate,
    Time,
    Speed,
    Accel,
    Force,
    Torque,
    RotStiffness,
    Area,
    Density,
    Frequency,
    Voltage,
    Dimensionless,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        const DEG: f64 = PI / 180.0;
        match self {
            Dim::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3)],
            Dim::Mass => &[("kg", 1.0), ("g", 1e-3)],
            Dim::Angle => &[("rad", 1.0), ("deg", DEG)],
            Dim::AngularRate => &[("rad/s", 1.0), ("deg/s", DEG), ("rpm", 2.0 * PI / 60.0)],
            Dim::Time => &[("s", 1.0), ("ms", 1e-3)],
            Dim::Speed => &[("m/s", 1.0), ("cm/s", 1e-2)],
            Dim::Accel => &[("m/s^2", 1.0), ("g0", GRAVITY)],
            Dim::Force => &[("N", 1.0), ("kgf", GRAVITY), ("kg*f", GRAVITY)],
            Dim::Torque => &[("N*m", 1.0), ("N*mm", 1e-3)],
            Dim::RotStiffness => &[("N*m/rad", 1.0), ("N*mm/deg", 1e-3 / DEG), ("N*m/deg", 1.0 / DEG)],
            Dim::Area => &[("m^2", 1.0), ("cm^2", 1e-4)],
            Dim::Density => &[("kg/m^3", 1.0)],
            Dim::Frequency => &[("Hz", 1.0), ("1/s", 1.0)],
            Dim::Voltage => &[("V", 1.0)],
            Dim::Dimensionless => &[("", 1.0)],
        }
    }
}

fn normalize_unit(u: &str) -> String {
    u.chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .replace('·', "*")
        .replace('°', "deg")
        .replace('²', "^2")
        .replace('³', "^3")
        .replace("Nmm", "N*mm")
        .replace("Nm", "N*m")
}

/// Parses `"<value> <unit>"` into SI.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || ((c == 'e' || c == 'E') && i > 0)))
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num.parse().map_err(|_| format!("cannot read a number from '{text}'"))?;
    let unit = normalize_unit(unit);
    dim.units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| value * f)
        .ok_or_else(|| {
            let known: Vec<&str> = dim.units().iter().map(|(u, _)| *u).filter(|u| !u.is_empty()).collect();
            if known.is_empty() {
                format!("unit '{unit}' not allowed on a dimensionless value")
            } else {
                format!("unknown unit '{unit}' (expected one of {})", known.join(", "))
            }
        })
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// A section being consumed key by key.
struct Reader<'a> {
    text: &'a str,
    section: &'static str,
    entries: Section,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, section: &'static str, entries: Option<Section>) -> Self {
        Self { text, section, entries: entries.unwrap_or_default() }
    }

    fn error(&self, key: &str, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError::Key {
            line: line_of(self.text, span),
            key: format!("{}.{}", self.section, key),
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<Spanned<Value>> {
        self.entries.remove(key)
    }

    fn quantity_of(&self, key: &str, v: &Spanned<Value>, dim: Dim) -> Result<f64, ConfigError> {
        let x = match v.get_ref() {
            Value::Integer(i) => *i as f64,
            Value::Float(f) => *f,
            Value::String(s) => parse_quantity(s, dim).map_err(|m| self.error(key, v.span(), m))?,
            other => return Err(self.error(key, v.span(), format!("expected a number, got {}", other.type_str()))),
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.error(key, v.span(), "value must be finite"))
        }
    }

    fn quantity(&mut self, key: &str, dim: Dim) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            Some(v) => self.quantity_of(key, &v, dim).map(Some),
            None => Ok(None),
        }
    }

    fn set(&mut self, key: &str, dim: Dim, target: &mut f64) -> Result<(), ConfigError> {
        if let Some(x) = self.quantity(key, dim)? {
            *target = x;
        }
        Ok(())
    }

    fn flag(&mut self, key: &str, target: &mut bool) -> Result<(), ConfigError> {
        if let Some(v) = self.take(key) {
            match v.get_ref() {
                Value::Boolean(b) => *target = *b,
                other => return Err(self.error(key, v.span(), format!("expected true or false, got {}", other.type_str()))),
            }
        }
        Ok(())
    }

    fn string(&mut self, key: &str) -> Result<Option<(String, Range<usize>)>, ConfigError> {
        match self.take(key) {
            Some(v) => match v.get_ref() {
                Value::String(s) => Ok(Some((s.clone(), v.span()))),
                other => Err(self.error(key, v.span(), format!("expected a string, got {}", other.type_str()))),
            },
            None => Ok(None),
        }
    }

    fn choice<T>(&mut self, key: &str, parse: impl Fn(&str) -> Option<T>, allowed: &str) -> Result<Option<T>, ConfigError> {
        match self.string(key)? {
            Some((s, span)) => parse(&s)
                .map(Some)
                .ok_or_else(|| self.error(key, span, format!("unknown value '{s}' (expected {allowed})"))),
            None => Ok(None),
        }
    }

    /// Rejects whatever keys were not consumed.
    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().next() {
            Some((k, v)) => Err(self.error(k, v.span(), "unknown key")),
            None => Ok(()),
        }
    }
}

/// Parses a scenario document.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s)).unwrap_or(1),
        message: e.message().trim().to_string(),
    })?;
    if let Some(v) = &raw.version {
        if *v.get_ref() != FORMAT_VERSION {
            return Err(ConfigError::Key {
                line: line_of(text, v.span()),
                key: "version".into(),
                message: format!("unsupported format version {} (expected {FORMAT_VERSION})", v.get_ref()),
            });
        }
    }
    let mut cfg = Config::default();
    if let Some(name) = raw.name {
        cfg.scenario.name = name;
    }
    read_params(Reader::new(text, "params", raw.params), &mut cfg.scenario)?;
    read_initial_state(Reader::new(text, "initial_state", raw.initial_state), &mut cfg.scenario)?;
    read_controller(Reader::new(text, "controller", raw.controller), &mut cfg.scenario)?;
    read_thrust(Reader::new(text, "thrust_schedule", raw.thrust_schedule), &mut cfg.scenario)?;
    read_integration(Reader::new(text, "integration", raw.integration), &mut cfg.scenario)?;
    read_gait(Reader::new(text, "gait", raw.gait), &mut cfg.gait)?;
    if raw.sweep.is_some() {
        cfg.sweep = Some(read_sweep(Reader::new(text, "sweep", raw.sweep))?);
    }
    read_metrics(Reader::new(text, "metrics", raw.metrics), &mut cfg.metrics)?;
    cfg.scenario.validate()?;
    cfg.gait.validate()?;
    Ok(cfg)
}

fn read_params(mut r: Reader, sc: &mut Scenario) -> Result<(), ConfigError> {
    let p = &mut sc.params;
    r.set("body_mass", Dim::Mass, &mut p.m_body)?;
    r.set("upper_limb_mass", Dim::Mass, &mut p.m_upper)?;
    r.set("lower_limb_mass", Dim::Mass, &mut p.m_lower)?;
    r.set("palm_mass", Dim::Mass, &mut p.m_palm)?;
    r.set("toe_mass", Dim::Mass, &mut p.m_toe)?;
    r.set("body_length", Dim::Length, &mut p.body_length)?;
    r.set("l1", Dim::Length, &mut p.l1)?;
    r.set("l2", Dim::Length, &mut p.l2)?;
    r.set("l3", Dim::Length, &mut p.l3)?;
    r.set("l4", Dim::Length, &mut p.l4)?;
    r.set("theta3", Dim::Angle, &mut p.theta3)?;
    r.set("air_density", Dim::Density, &mut p.air_density)?;
    r.set("wing_area", Dim::Area, &mut p.wing_area)?;
    r.set("tail_area", Dim::Area, &mut p.tail_area)?;
    r.set("wing_angle_offset", Dim::Angle, &mut p.wing_angle_offset)?;
    r.set("tail_angle_offset", Dim::Angle, &mut p.tail_angle_offset)?;
    r.set("thrust_angle_offset", Dim::Angle, &mut p.thrust_angle_offset)?;
    r.set("max_thrust", Dim::Force, &mut p.max_thrust)?;
    r.set("ankle_spring_constant", Dim::RotStiffness, &mut p.ankle_spring)?;
    r.set("toe_spring_constant", Dim::RotStiffness, &mut p.toe_spring)?;
    r.set("ankle_rest_angle", Dim::Angle, &mut p.ankle_rest_angle)?;
    r.set("toe_rest_angle", Dim::Angle, &mut p.toe_rest_angle)?;
    r.set("p_w_x", Dim::Length, &mut p.wing_center.x)?;
    r.set("p_w_y", Dim::Length, &mut p.wing_center.y)?;
    r.set("p_t_x", Dim::Length, &mut p.tail_center.x)?;
    r.set("p_t_y", Dim::Length, &mut p.tail_center.y)?;
    r.set("body_com_x", Dim::Length, &mut p.body_com_offset.x)?;
    r.set("body_com_y", Dim::Length, &mut p.body_com_offset.y)?;
    r.set("gear_ratio", Dim::Dimensionless, &mut p.gear_ratio)?;
    r.set("motor_max_speed", Dim::AngularRate, &mut p.motor_max_speed)?;
    r.set("motor_max_torque", Dim::Torque, &mut p.motor_max_torque)?;
    r.set("toe_deflection_max", Dim::Angle, &mut p.toe_deflection_max)?;
    r.set("gravity", Dim::Accel, &mut p.gravity)?;

    let f = &mut sc.forces;
    if let Some((name, span)) = r.string("aero_model")? {
        f.aero = aero_models().create(&name).map_err(|e| r.error("aero_model", span, e.to_string()))?;
    }
    r.flag("aero_enabled", &mut f.aero_enabled)?;
    r.flag("aero_in_stance", &mut f.aero_in_stance)?;
    r.flag("ankle_spring_enabled", &mut f.ankle_spring)?;
    r.flag("toe_spring_enabled", &mut f.toe_spring)?;
    r.finish()
}

fn read_initial_state(mut r: Reader, sc: &mut Scenario) -> Result<(), ConfigError> {
    let q = sc.initial.q;
    let mut angles = [q[2], q[3], q[4], q[5]];
    r.set("initial_pitch_angle", Dim::Angle, &mut angles[0])?;
    r.set("initial_hip_angle", Dim::Angle, &mut angles[1])?;
    r.set("initial_ankle_angle", Dim::Angle, &mut angles[2])?;
    r.set("initial_toe_deflection_angle", Dim::Angle, &mut angles[3])?;
    if let Some(mode) = r.choice("contact_mode", ContactMode::parse, "flat_toe, toe_tip or airborne")? {
        sc.initial_mode = mode;
    }
    let mut state = GeneralizedState::standing(angles[0], angles[1], angles[2], angles[3], &sc.params);
    if let Some(h) = r.quantity("clearance", Dim::Length)? {
        state.q[1] += h;
    }
    sc.initial = state;
    r.finish()
}

fn read_controller(mut r: Reader, sc: &mut Scenario) -> Result<(), ConfigError> {
    let rf = &mut sc.reference;
    if let Some(p) = r.choice("profile", RampProfile::parse, "time or displacement")? {
        rf.profile = p;
    }
    if let Some(v) = r.take("direction") {
        rf.direction = match v.get_ref() {
            Value::String(s) if s.trim() == "auto" => None,
            _ => Some(r.quantity_of("direction", &v, Dim::Angle)?),
        };
    }
    r.set("accel", Dim::Accel, &mut rf.accel)?;
    r.set("takeoff_speed", Dim::Speed, &mut rf.speed)?;
    r.set("pitch_reference", Dim::Angle, &mut rf.pitch)?;

    let c = &mut sc.control;
    r.set("lambda", Dim::Dimensionless, &mut c.lambda)?;
    if let Some(v) = r.take("priority") {
        let items = match v.get_ref() {
            Value::Array(a) => a.clone(),
            other => return Err(r.error("priority", v.span(), format!("expected an array, got {}", other.type_str()))),
        };
        let mut order = Vec::new();
        for item in items {
            let id = item.as_str().and_then(TaskId::parse).ok_or_else(|| {
                r.error("priority", v.span(), format!("unknown task {item} (expected pitch, horizontal, vertical)"))
            })?;
            order.push(id);
        }
        c.priority = order;
    }
    r.set("pitch_kp", Dim::Dimensionless, &mut c.pitch_gains.kp)?;
    r.set("pitch_kd", Dim::Dimensionless, &mut c.pitch_gains.kd)?;
    r.set("horizontal_kp", Dim::Dimensionless, &mut c.horizontal_gains.kp)?;
    r.set("horizontal_kd", Dim::Dimensionless, &mut c.horizontal_gains.kd)?;
    r.set("vertical_kp", Dim::Dimensionless, &mut c.vertical_gains.kp)?;
    r.set("vertical_kd", Dim::Dimensionless, &mut c.vertical_gains.kd)?;
    r.flag("constraint_first", &mut c.constraint_first)?;
    r.flag("speed_derating", &mut c.speed_derating)?;
    r.flag("spring_compensation", &mut c.spring_compensation)?;
    r.flag("thrust_compensation", &mut c.thrust_compensation)?;
    r.set("hold_kp", Dim::RotStiffness, &mut sc.hold.kp)?;
    r.set("hold_kd", Dim::Dimensionless, &mut sc.hold.kd)?;
    r.finish()
}

fn read_thrust(mut r: Reader, sc: &mut Scenario) -> Result<(), ConfigError> {
    let level = r.quantity("level", Dim::Dimensionless)?;
    let points = r.take("points");
    match (level, points) {
        (Some(_), Some(v)) => return Err(r.error("points", v.span(), "give either 'level' or 'points', not both")),
        (Some(l), None) => sc.thrust = ThrustSchedule::constant(l),
        (None, Some(v)) => {
            let bad = || r.error("points", v.span(), "expected an array of [time, level] pairs");
            let rows = v.get_ref().as_array().ok_or_else(bad)?;
            let mut pts = Vec::with_capacity(rows.len());
            for row in rows {
                let pair = row.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
                let num = |x: &Value| match x {
                    Value::Integer(i) => Some(*i as f64),
                    Value::Float(f) => Some(*f),
                    Value::String(s) => parse_quantity(s, Dim::Time).ok(),
                    _ => None,
                };
                let t = num(&pair[0]).ok_or_else(bad)?;
                let l = match &pair[1] {
                    Value::Integer(i) => *i as f64,
                    Value::Float(f) => *f,
                    _ => return Err(bad()),
                };
                pts.push((t, l));
            }
            let schedule = ThrustSchedule { points: pts };
            schedule.validate().map_err(|e| r.error("points", v.span(), e.to_string()))?;
            sc.thrust = schedule;
        }
        (None, None) => {}
    }
    r.finish()
}

fn read_integration(mut r: Reader, sc: &mut Scenario) -> Result<(), ConfigError> {
    r.set("duration", Dim::Time, &mut sc.duration)?;
    r.set("step", Dim::Time, &mut sc.step)?;
    r.set("event_tolerance", Dim::Time, &mut sc.event_tolerance)?;
    r.set("log_rate", Dim::Frequency, &mut sc.log_rate)?;
    r.set("baumgarte_omega", Dim::Frequency, &mut sc.baumgarte.omega)?;
    r.set("flight_window", Dim::Time, &mut sc.flight_window)?;
    if let Some((name, span)) = r.string("integrator")? {
        crate::integrate::integrators()
            .create(&name)
            .map_err(|e| r.error("integrator", span.clone(), e.to_string()))?;
        sc.integrator = name;
    }
    r.finish()
}

fn read_point(r: &mut Reader, prefix: &str, target: &mut Vector2<f64>) -> Result<(), ConfigError> {
    r.set(&format!("{prefix}_x"), Dim::Length, &mut target.x)?;
    r.set(&format!("{prefix}_y"), Dim::Length, &mut target.y)
}

fn read_gait(mut r: Reader, g: &mut GaitConfig) -> Result<(), ConfigError> {
    if let Some(m) = r.choice("mode", GaitMode::parse, "jump_takeoff, walk, height_jump or forward_hop")? {
        g.mode = m;
    }
    r.set("stand_height", Dim::Length, &mut g.stand_height)?;
    r.set("foot_x", Dim::Length, &mut g.foot_x)?;
    r.set("walk_speed", Dim::Speed, &mut g.walk_speed)?;
    r.set("stroke", Dim::Length, &mut g.stroke)?;
    r.set("lift", Dim::Length, &mut g.lift)?;
    r.set("duty", Dim::Dimensionless, &mut g.duty)?;
    r.set("crouch_hip", Dim::Angle, &mut g.crouch_hip)?;
    r.set("crouch_ankle", Dim::Angle, &mut g.crouch_ankle)?;
    r.set("crouch_height", Dim::Length, &mut g.crouch_height)?;
    r.set("push_length", Dim::Length, &mut g.push_length)?;
    r.set("hop_push_length", Dim::Length, &mut g.hop_push_length)?;
    r.set("push_duration", Dim::Time, &mut g.push_duration)?;
    r.set("jump_angle", Dim::Angle, &mut g.jump_angle)?;
    r.set("hop_angle", Dim::Angle, &mut g.hop_angle)?;
    r.set("jump_pitch", Dim::Angle, &mut g.jump_pitch)?;
    r.set("height_jump_pitch", Dim::Angle, &mut g.height_jump_pitch)?;
    r.set("hop_pitch", Dim::Angle, &mut g.hop_pitch)?;
    read_point(&mut r, "tuck", &mut g.tuck)?;
    read_point(&mut r, "stretch_back", &mut g.stretch_back)?;
    read_point(&mut r, "landing", &mut g.landing)?;
    r.set("settle", Dim::Length, &mut g.settle)?;
    r.set("crouch_duration", Dim::Time, &mut g.crouch_duration)?;
    r.set("retract_duration", Dim::Time, &mut g.retract_duration)?;
    r.set("stretch_duration", Dim::Time, &mut g.stretch_duration)?;
    r.set("balance_duration", Dim::Time, &mut g.balance_duration)?;
    if let Some(c) = r.quantity("cycle_time", Dim::Time)? {
        g.cycle_time = Some(c);
    }
    r.set("control_rate", Dim::Frequency, &mut g.control_rate)?;
    r.set("hip_delay", Dim::Time, &mut g.hip_delay)?;
    if let Some(v) = r.take("n_steps") {
        match v.get_ref() {
            Value::Integer(n) if *n >= 1 => g.n_steps = Some(*n as usize),
            _ => return Err(r.error("n_steps", v.span(), "expected an integer >= 1")),
        }
    }
    r.finish()
}

/// Unit dimension of each sweep axis.
pub fn sweep_dim(key: &str) -> Option<Dim> {
    Some(match key {
        "gear_ratio" | "thrust_level" => Dim::Dimensionless,
        "motor_max_torque" => Dim::Torque,
        "ankle_spring" | "toe_spring" => Dim::RotStiffness,
        "ankle_rest_angle" | "toe_deflection_max" | "pitch_reference" => Dim::Angle,
        "body_mass" => Dim::Mass,
        "max_thrust" => Dim::Force,
        "takeoff_speed" => Dim::Speed,
        "ramp_accel" => Dim::Accel,
        "step" | "duration" => Dim::Time,
        _ => return None,
    })
}

fn read_sweep(mut r: Reader) -> Result<SweepSpec, ConfigError> {
    let mut parallel = true;
    r.flag("parallel", &mut parallel)?;
    let mut axes = Vec::new();
    let keys: Vec<String> = r.entries.keys().cloned().collect();
    for key in keys {
        let v = r.take(&key).expect("key listed above");
        let dim = sweep_dim(&key)
            .ok_or_else(|| r.error(&key, v.span(), format!("not a sweep parameter (expected one of {})", SWEEP_KEYS.join(", "))))?;
        let items = v
            .get_ref()
            .as_array()
            .filter(|a| !a.is_empty())
            .ok_or_else(|| r.error(&key, v.span(), "expected a non-empty array of values"))?;
        let mut values = Vec::with_capacity(items.len());
        for item in items {
            let x = match item {
                Value::Integer(i) => *i as f64,
                Value::Float(f) => *f,
                Value::String(s) => parse_quantity(s, dim).map_err(|m| r.error(&key, v.span(), m))?,
                other => return Err(r.error(&key, v.span(), format!("expected numbers, got {}", other.type_str()))),
            };
            values.push(x);
        }
        axes.push((key, values));
    }
    if axes.is_empty() {
        return Err(ConfigError::Key { line: 1, key: "sweep".into(), message: "no sweep axes given".into() });
    }
    Ok(SweepSpec { grid: SweepGrid::new(axes), parallel })
}

fn read_metrics(mut r: Reader, m: &mut MetricsConfig) -> Result<(), ConfigError> {
    m.battery_voltage = r.quantity("battery_voltage", Dim::Voltage)?;
    m.body_mass = r.quantity("body_mass", Dim::Mass)?;
    m.leg_length = r.quantity("leg_length", Dim::Length)?;
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_convert_to_si() {
        assert!((parse_quantity("45 deg", Dim::Angle).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_quantity("45°", Dim::Angle).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_quantity("0.63 kgf", Dim::Force).unwrap() - 0.63 * 9.81).abs() < 1e-12);
        assert!((parse_quantity("3.207 N*mm/deg", Dim::RotStiffness).unwrap() - 0.183747).abs() < 1e-6);
        assert!((parse_quantity("3.207 Nmm/°", Dim::RotStiffness).unwrap() - 0.183747).abs() < 1e-6);
        assert!((parse_quantity("2e-4 s", Dim::Time).unwrap() - 2e-4).abs() < 1e-18);
        assert!((parse_quantity("12 cm", Dim::Length).unwrap() - 0.12).abs() < 1e-15);
        assert_eq!(parse_quantity("19.13", Dim::Dimensionless).unwrap(), 19.13);
        assert!(parse_quantity("3 furlongs", Dim::Length).unwrap_err().contains("furlongs"));
        assert!(parse_quantity("0.5 kg", Dim::Length).is_err());
        assert!(parse_quantity("abc", Dim::Length).is_err());
    }

    #[test]
    fn empty_document_is_the_default_scenario() {
        let cfg = parse_config("").unwrap();
        let d = Scenario::default();
        assert_eq!(cfg.scenario.params, d.params);
        assert_eq!(cfg.scenario.initial, d.initial);
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn errors_name_key_and_line() {
        let text = "version = 1\n[params]\nl1 = \"0.12 m\"\nbody_mass = \"0.5 parsecs\"\n";
        let err = parse_config(text).unwrap_err();
        match &err {
            ConfigError::Key { line, key, .. } => {
                assert_eq!(*line, 4);
                assert_eq!(key, "params.body_mass");
            }
            e => panic!("{e}"),
        }
        assert!(err.to_string().contains("body_mass"));
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let err = parse_config("[params]\nl9 = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Key { line: 2, .. }), "{err}");
        let err = parse_config("\n[bogus]\nx = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { .. }), "{err}");
    }
}
