//! Foot-space trajectories for walking, jumping and hopping, two-link leg
//! inverse kinematics, step-wise joint references and foot support analysis.
//!
//! Foot paths are expressed in the hip frame: origin at the hip, axes aligned
//! with the body (x forward, y up). The tracked foot point is the lower-limb
//! end, so the leg is the two-link chain `l1`, `l2`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{com_position, forward_kinematics, rot2, GeneralizedState};
use crate::params::RobotParams;
use crate::registry::Registry;

const REACH_MARGIN: f64 = 1e-6;

/// Sign of the ankle bend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnkleBend {
    /// `q5 ∈ [0, π]`: the ankle sits behind the hip–foot line, as in birds.
    Backward,
    /// `q5 ∈ [−π, 0]`.
    Forward,
}

/// Hip-frame foot position for hip angle `q4` and ankle angle `q5`.
pub fn leg_fk(q4: f64, q5: f64, p: &RobotParams) -> Vector2<f64> {
    rot2(q4) * Vector2::new(p.l1, 0.0) + rot2(q4 + q5) * Vector2::new(p.l2, 0.0)
}

/// `∂ leg_fk / ∂(q4, q5)`.
pub fn leg_jacobian(q4: f64, q5: f64, p: &RobotParams) -> Matrix2<f64> {
    let (s1, c1) = q4.sin_cos();
    let (s12, c12) = (q4 + q5).sin_cos();
    Matrix2::new(
        -p.l1 * s1 - p.l2 * s12,
        -p.l2 * s12,
        p.l1 * c1 + p.l2 * c12,
        p.l2 * c12,
    )
}

/// Closed-form two-link IK on the bird-like (backward) branch.
pub fn ik_leg(target: &Vector2<f64>, p: &RobotParams) -> Result<(f64, f64)> {
    ik_leg_branch(target, p, AnkleBend::Backward)
}

pub fn ik_leg_branch(target: &Vector2<f64>, p: &RobotParams, bend: AnkleBend) -> Result<(f64, f64)> {
    let r = target.norm();
    let r_min = (p.l1 - p.l2).abs() + REACH_MARGIN;
    let r_max = p.l1 + p.l2 - REACH_MARGIN;
    if !(r >= r_min && r <= r_max) {
        let dir = if r > 0.0 { target / r } else { Vector2::new(0.0, -1.0) };
        let nearest = dir * r.clamp(r_min, r_max);
        return Err(Error::Unreachable {
            x: target.x,
            y: target.y,
            nearest_x: nearest.x,
            nearest_y: nearest.y,
        });
    }
    let c5 = ((r * r - p.l1 * p.l1 - p.l2 * p.l2) / (2.0 * p.l1 * p.l2)).clamp(-1.0, 1.0);
    let q5 = match bend {
        AnkleBend::Backward => c5.acos(),
        AnkleBend::Forward => -c5.acos(),
    };
    let q4 = target.y.atan2(target.x) - (p.l2 * q5.sin()).atan2(p.l1 + p.l2 * q5.cos());
    Ok((q4, q5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GaitMode {
    JumpTakeoff,
    Walk,
    HeightJump,
    ForwardHop,
}

impl GaitMode {
    pub const ALL: [GaitMode; 4] = [GaitMode::JumpTakeoff, GaitMode::Walk, GaitMode::HeightJump, GaitMode::ForwardHop];

    pub fn as_str(self) -> &'static str {
        match self {
            GaitMode::JumpTakeoff => "jump_takeoff",
            GaitMode::Walk => "walk",
            GaitMode::HeightJump => "height_jump",
            GaitMode::ForwardHop => "forward_hop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s.trim())
    }
}

/// One phase of a foot path: cubic segments with zero end velocities
/// between consecutive waypoints, sharing the phase duration equally.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaitPhase {
    pub name: String,
    pub duration: f64,
    pub waypoints: Vec<Vector2<f64>>,
    /// Whether the foot bears load during this phase.
    pub contact: bool,
}

impl GaitPhase {
    fn new(name: &str, duration: f64, waypoints: Vec<Vector2<f64>>, contact: bool) -> Self {
        Self { name: name.into(), duration, waypoints, contact }
    }

    pub fn start(&self) -> Vector2<f64> {
        self.waypoints[0]
    }

    pub fn end(&self) -> Vector2<f64> {
        self.waypoints[self.waypoints.len() - 1]
    }

    /// Position and velocity at `t ∈ [0, duration]`.
    pub fn eval(&self, t: f64) -> (Vector2<f64>, Vector2<f64>) {
        let n = self.waypoints.len() - 1;
        if n == 0 {
            return (self.waypoints[0], Vector2::zeros());
        }
        let seg = self.duration / n as f64;
        let u = (t / seg).clamp(0.0, n as f64);
        let k = (u.floor() as usize).min(n - 1);
        let s = u - k as f64;
        let (a, b) = (self.waypoints[k], self.waypoints[k + 1]);
        let blend = s * s * (3.0 - 2.0 * s);
        let rate = 6.0 * s * (1.0 - s) / seg;
        (a + (b - a) * blend, (b - a) * rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootTrajectory {
    pub mode: GaitMode,
    /// Body pitch the path is designed for (rad).
    pub body_pitch: f64,
    /// Hip-frame height of the ground at the standing posture (negative).
    pub ground_y: f64,
    pub phases: Vec<GaitPhase>,
}

impl FootTrajectory {
    pub fn duration(&self) -> f64 {
        self.phases.iter().map(|ph| ph.duration).sum()
    }

    pub fn phase(&self, name: &str) -> Option<&GaitPhase> {
        self.phases.iter().find(|ph| ph.name == name)
    }

    /// Index of the active phase and the time inside it.
    fn locate(&self, t: f64) -> (usize, f64) {
        let mut start = 0.0;
        for (i, ph) in self.phases.iter().enumerate() {
            if t < start + ph.duration || i + 1 == self.phases.len() {
                return (i, (t - start).clamp(0.0, ph.duration));
            }
            start += ph.duration;
        }
        (0, 0.0)
    }

    pub fn eval(&self, t: f64) -> (Vector2<f64>, Vector2<f64>) {
        let (i, local) = self.locate(t);
        self.phases[i].eval(local)
    }

    /// Copy with every phase stretched so the whole path lasts `total` seconds.
    pub fn rescaled(&self, total: f64) -> Self {
        let k = total / self.duration();
        let mut out = self.clone();
        for ph in &mut out.phases {
            ph.duration *= k;
        }
        out
    }

    pub fn validate(&self, p: &RobotParams) -> Result<()> {
        let r_max = p.l1 + p.l2 - REACH_MARGIN;
        for ph in &self.phases {
            if !(ph.duration > 0.0) {
                return Err(Error::InvalidInput(format!("phase '{}' needs a positive duration", ph.name)));
            }
            if ph.waypoints.is_empty() {
                return Err(Error::InvalidInput(format!("phase '{}' has no waypoints", ph.name)));
            }
            if let Some(w) = ph.waypoints.iter().find(|w| w.norm() > r_max) {
                return Err(Error::InvalidInput(format!(
                    "phase '{}' waypoint ({:.4}, {:.4}) is out of reach",
                    ph.name, w.x, w.y
                )));
            }
        }
        Ok(())
    }
}

/// Shape parameters of the default foot paths (lengths in m, angles in rad,
/// durations in s).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaitConfig {
    pub mode: GaitMode,
    /// Hip height above the foot when standing.
    pub stand_height: f64,
    /// Horizontal foot offset from the hip when standing.
    pub foot_x: f64,
    pub walk_speed: f64,
    pub stroke: f64,
    pub lift: f64,
    /// Stance fraction of the walking cycle.
    pub duty: f64,
    /// Crouched posture (hip, ankle) where jumps start.
    pub crouch_hip: f64,
    pub crouch_ankle: f64,
    /// Hip height above the foot at the bottom of the hop crouch.
    pub crouch_height: f64,
    pub push_length: f64,
    pub hop_push_length: f64,
    pub push_duration: f64,
    /// World direction of the jump push-off from horizontal.
    pub jump_angle: f64,
    pub hop_angle: f64,
    pub jump_pitch: f64,
    pub height_jump_pitch: f64,
    pub hop_pitch: f64,
    /// Foot position after the push, tucked under the body.
    pub tuck: Vector2<f64>,
    /// Foot position at the end of the jump stretch-back.
    pub stretch_back: Vector2<f64>,
    /// Foot position reached forward for landing.
    pub landing: Vector2<f64>,
    /// Hip height lost during the hop balance phase.
    pub settle: f64,
    pub crouch_duration: f64,
    pub retract_duration: f64,
    pub stretch_duration: f64,
    pub balance_duration: f64,
    /// Duration the path is stretched to; `None` keeps the phase durations.
    pub cycle_time: Option<f64>,
    /// Joint command rate (Hz).
    pub control_rate: f64,
    /// Number of velocity steps; `None` keeps the continuous reference.
    pub n_steps: Option<usize>,
    pub hip_delay: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        let deg = PI / 180.0;
        Self {
            mode: GaitMode::Walk,
            stand_height: 0.16,
            foot_x: 0.0,
            walk_speed: 0.23,
            stroke: 0.06,
            lift: 0.03,
            duty: 0.6,
            crouch_hip: 135.0 * deg,
            crouch_ankle: 145.0 * deg,
            crouch_height: 0.10,
            push_length: 0.15,
            hop_push_length: 0.08,
            push_duration: 2.5 / 13.8,
            jump_angle: 63.5 * deg,
            hop_angle: 45.0 * deg,
            jump_pitch: 10.0 * deg,
            height_jump_pitch: 30.0 * deg,
            hop_pitch: 0.0,
            tuck: Vector2::new(-0.06, -0.08),
            stretch_back: Vector2::new(-0.20, -0.06),
            landing: Vector2::new(0.05, -0.16),
            settle: 0.04,
            crouch_duration: 0.3,
            retract_duration: 0.15,
            stretch_duration: 0.15,
            balance_duration: 0.6,
            cycle_time: None,
            control_rate: 1000.0,
            n_steps: None,
            hip_delay: 0.0,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("stand_height", self.stand_height),
            ("walk_speed", self.walk_speed),
            ("stroke", self.stroke),
            ("push_length", self.push_length),
            ("hop_push_length", self.hop_push_length),
            ("push_duration", self.push_duration),
            ("crouch_height", self.crouch_height),
            ("crouch_duration", self.crouch_duration),
            ("retract_duration", self.retract_duration),
            ("stretch_duration", self.stretch_duration),
            ("balance_duration", self.balance_duration),
            ("control_rate", self.control_rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("gait {name} must be positive, got {v}")));
            }
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::InvalidInput(format!("gait duty must be in (0, 1), got {}", self.duty)));
        }
        if !(self.lift >= 0.0 && self.hip_delay >= 0.0 && self.settle >= 0.0) {
            return Err(Error::InvalidInput("gait lift, settle and hip_delay must be >= 0".into()));
        }
        if self.cycle_time.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::InvalidInput("gait cycle_time must be > 0".into()));
        }
        if self.n_steps == Some(0) {
            return Err(Error::InvalidInput("gait n_steps must be >= 1".into()));
        }
        Ok(())
    }

    fn stand(&self) -> Vector2<f64> {
        Vector2::new(self.foot_x, -self.stand_height)
    }

    /// Push-off end point: the foot moves opposite to the body, whose world
    /// direction is `angle`, seen from a body pitched by `pitch`.
    fn push_end(start: Vector2<f64>, length: f64, angle: f64, pitch: f64) -> Vector2<f64> {
        let dir = Vector2::new((angle - pitch).cos(), (angle - pitch).sin());
        start - dir * length
    }
}

pub trait GaitGenerator: Send + Sync {
    fn mode(&self) -> GaitMode;
    fn generate(&self, cfg: &GaitConfig, p: &RobotParams) -> FootTrajectory;
}

/// Stance sweeps the bottom of the loop rearward at walking speed, swing
/// returns over the top.
pub struct Walk;

impl GaitGenerator for Walk {
    fn mode(&self) -> GaitMode {
        GaitMode::Walk
    }

    fn generate(&self, cfg: &GaitConfig, _p: &RobotParams) -> FootTrajectory {
        let s = cfg.stand();
        let half = Vector2::new(0.5 * cfg.stroke, 0.0);
        let (front, back) = (s + half, s - half);
        let stance = cfg.stroke / cfg.walk_speed;
        let swing = stance * (1.0 - cfg.duty) / cfg.duty;
        FootTrajectory {
            mode: GaitMode::Walk,
            body_pitch: 0.0,
            ground_y: s.y,
            phases: vec![
                GaitPhase::new("stance", stance, vec![front, back], true),
                GaitPhase::new("swing", swing, vec![back, s + Vector2::new(0.0, cfg.lift), front], false),
            ],
        }
    }
}

fn crouch_point(cfg: &GaitConfig, p: &RobotParams) -> Vector2<f64> {
    leg_fk(cfg.crouch_hip, cfg.crouch_ankle, p)
}

/// Push-off along the jump direction from the crouch, then stretch the foot back.
pub struct JumpTakeoff;

impl GaitGenerator for JumpTakeoff {
    fn mode(&self) -> GaitMode {
        GaitMode::JumpTakeoff
    }

    fn generate(&self, cfg: &GaitConfig, p: &RobotParams) -> FootTrajectory {
        let c = crouch_point(cfg, p);
        let push = GaitConfig::push_end(c, cfg.push_length, cfg.jump_angle, cfg.jump_pitch);
        FootTrajectory {
            mode: GaitMode::JumpTakeoff,
            body_pitch: cfg.jump_pitch,
            ground_y: -cfg.stand_height,
            phases: vec![
                GaitPhase::new("push-off", cfg.push_duration, vec![c, push], true),
                GaitPhase::new("stretch-back", cfg.stretch_duration, vec![push, cfg.stretch_back], false),
            ],
        }
    }
}

/// The jump push-off in the hip frame, started from a steeper body pitch.
pub struct HeightJump;

impl GaitGenerator for HeightJump {
    fn mode(&self) -> GaitMode {
        GaitMode::HeightJump
    }

    fn generate(&self, cfg: &GaitConfig, p: &RobotParams) -> FootTrajectory {
        let c = crouch_point(cfg, p);
        let push = GaitConfig::push_end(c, cfg.push_length, cfg.jump_angle, cfg.jump_pitch);
        FootTrajectory {
            mode: GaitMode::HeightJump,
            body_pitch: cfg.height_jump_pitch,
            ground_y: -cfg.stand_height,
            phases: vec![
                GaitPhase::new("push-off", cfg.push_duration, vec![c, push], true),
                GaitPhase::new("retract", cfg.retract_duration, vec![push, cfg.tuck], false),
            ],
        }
    }
}

/// Crouch, push forward and up, retract, reach forward, then settle low.
pub struct ForwardHop;

impl GaitGenerator for ForwardHop {
    fn mode(&self) -> GaitMode {
        GaitMode::ForwardHop
    }

    fn generate(&self, cfg: &GaitConfig, _p: &RobotParams) -> FootTrajectory {
        let s = cfg.stand();
        let crouch = Vector2::new(cfg.foot_x, -cfg.crouch_height);
        let push = GaitConfig::push_end(crouch, cfg.hop_push_length, cfg.hop_angle, cfg.hop_pitch);
        let settled = cfg.landing + Vector2::new(0.0, cfg.settle);
        FootTrajectory {
            mode: GaitMode::ForwardHop,
            body_pitch: cfg.hop_pitch,
            ground_y: s.y,
            phases: vec![
                GaitPhase::new("crouch", cfg.crouch_duration, vec![s, crouch], true),
                GaitPhase::new("push-off", cfg.push_duration, vec![crouch, push], true),
                GaitPhase::new("retract", cfg.retract_duration, vec![push, cfg.tuck], false),
                GaitPhase::new("stretch", cfg.stretch_duration, vec![cfg.tuck, cfg.landing], false),
                GaitPhase::new("balance", cfg.balance_duration, vec![cfg.landing, settled], true),
            ],
        }
    }
}

pub fn gait_generators() -> Registry<dyn GaitGenerator> {
    let mut r: Registry<dyn GaitGenerator> = Registry::new("gait");
    r.register(GaitMode::JumpTakeoff.as_str(), || Arc::new(JumpTakeoff));
    r.register(GaitMode::Walk.as_str(), || Arc::new(Walk));
    r.register(GaitMode::HeightJump.as_str(), || Arc::new(HeightJump));
    r.register(GaitMode::ForwardHop.as_str(), || Arc::new(ForwardHop));
    r
}

pub fn gen_trajectory(mode: GaitMode, cfg: &GaitConfig, p: &RobotParams) -> Result<FootTrajectory> {
    let traj = gait_generators().create(mode.as_str())?.generate(cfg, p);
    traj.validate(p)?;
    Ok(traj)
}

/// Time-stamped hip and ankle references.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointReference {
    pub t: Vec<f64>,
    /// `(q4, q5)` per sample (rad).
    pub q: Vec<[f64; 2]>,
    /// `(q̇4, q̇5)` per sample (rad/s).
    pub qd: Vec<[f64; 2]>,
    pub n_steps: Option<usize>,
    pub hip_delay: f64,
}

impl JointReference {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.len() < 2 || self.q.len() != self.t.len() || self.qd.len() != self.t.len() {
            return Err(Error::InvalidInput("joint reference needs >= 2 samples of equal length".into()));
        }
        if let Some(i) = self.t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotoneTime { index: i + 1 });
        }
        Ok(())
    }

    /// Peak |q̇| over both joints.
    pub fn peak_speed(&self) -> f64 {
        self.qd.iter().flat_map(|v| v.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoidal integral of the velocity reference of joint `j`.
    pub fn displacement(&self, j: usize) -> f64 {
        self.t
            .windows(2)
            .zip(self.qd.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0][j] + v[1][j]))
            .sum()
    }
}

/// Exact integral of a piecewise-linear velocity from `t[0]` to `x`.
fn integral_to(t: &[f64], v: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..t.len() - 1 {
        let (a, b) = (t[i], t[i + 1]);
        if x <= a {
            break;
        }
        let hi = x.min(b);
        let slope = (v[i + 1] - v[i]) / (b - a);
        let va = v[i];
        let vh = va + slope * (hi - a);
        acc += 0.5 * (hi - a) * (va + vh);
    }
    acc
}

/// Step-wise velocity on `n` equal intervals of `[t0, t1]`, preserving the
/// integral over each interval, then delayed by `delay`.
struct StepProfile {
    t0: f64,
    width: f64,
    delay: f64,
    q0: f64,
    steps: Vec<f64>,
}

impl StepProfile {
    fn new(t: &[f64], v: &[f64], q0: f64, n: usize, delay: f64) -> Self {
        let (t0, t1) = (t[0], t[t.len() - 1]);
        let width = (t1 - t0) / n as f64;
        let steps = (0..n)
            .map(|k| {
                let a = t0 + width * k as f64;
                let b = if k + 1 == n { t1 } else { t0 + width * (k + 1) as f64 };
                (integral_to(t, v, b) - integral_to(t, v, a)) / (b - a)
            })
            .collect();
        Self { t0, width, delay, q0, steps }
    }

    fn velocity(&self, t: f64) -> f64 {
        let local = t - self.t0 - self.delay;
        let n = self.steps.len();
        if local < 0.0 || local > self.width * n as f64 {
            return 0.0;
        }
        self.steps[((local / self.width).floor() as usize).min(n - 1)]
    }

    fn position(&self, t: f64) -> f64 {
        let local = (t - self.t0 - self.delay).max(0.0);
        let mut q = self.q0;
        for (k, v) in self.steps.iter().enumerate() {
            let a = self.width * k as f64;
            if local <= a {
                break;
            }
            q += v * (local.min(a + self.width) - a);
        }
        q
    }
}

/// Replaces the velocity references by `n_steps` constant steps and delays the
/// hip channel by `hip_delay` (zero-filled). The time grid is extended by the
/// delay at the input sample spacing so both channels keep their displacement.
pub fn discretize_reference(reference: &JointReference, n_steps: usize, hip_delay: f64) -> Result<JointReference> {
    reference.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be >= 1".into()));
    }
    if !(hip_delay >= 0.0) {
        return Err(Error::InvalidInput(format!("hip_delay must be >= 0, got {hip_delay}")));
    }
    let t = &reference.t;
    let profiles: Vec<StepProfile> = (0..2)
        .map(|j| {
            let v: Vec<f64> = reference.qd.iter().map(|qd| qd[j]).collect();
            let delay = if j == 0 { hip_delay } else { 0.0 };
            StepProfile::new(t, &v, reference.q[0][j], n_steps, delay)
        })
        .collect();

    let mut times = t.clone();
    if hip_delay > 0.0 {
        let dt = t[t.len() - 1] - t[t.len() - 2];
        let end = t[t.len() - 1] + hip_delay;
        let mut k = 1;
        loop {
            let tk = t[t.len() - 1] + dt * k as f64;
            if tk >= end - 1e-12 * end.abs().max(1.0) {
                times.push(end);
                break;
            }
            times.push(tk);
            k += 1;
        }
    }
    let q = times.iter().map(|&tk| [profiles[0].position(tk), profiles[1].position(tk)]).collect();
    let qd = times.iter().map(|&tk| [profiles[0].velocity(tk), profiles[1].velocity(tk)]).collect();
    Ok(JointReference { t: times, q, qd, n_steps: Some(n_steps), hip_delay })
}

/// Samples a foot path at `rate`, solves the IK and maps foot velocities
/// through the inverse leg Jacobian. The path is stretched to `cycle_time`.
pub fn gait_to_joint_commands(
    traj: &FootTrajectory,
    p: &RobotParams,
    cycle_time: f64,
    rate: f64,
    n_steps: Option<usize>,
    hip_delay: f64,
) -> Result<JointReference> {
    if !(cycle_time > 0.0 && rate > 0.0) {
        return Err(Error::InvalidInput("cycle time and command rate must be > 0".into()));
    }
    let traj = traj.rescaled(cycle_time);
    let n = ((cycle_time * rate).round() as usize).max(1);
    let mut out = JointReference { t: Vec::new(), q: Vec::new(), qd: Vec::new(), n_steps: None, hip_delay: 0.0 };
    for k in 0..=n {
        let t = cycle_time * k as f64 / n as f64;
        let (pos, vel) = traj.eval(t);
        let (q4, q5) = ik_leg(&pos, p)?;
        let jac = leg_jacobian(q4, q5, p);
        let qd = jac
            .lu()
            .solve(&vel)
            .ok_or_else(|| Error::InvalidInput(format!("leg singular at t = {t:.4} s")))?;
        out.t.push(t);
        out.q.push([q4, q5]);
        out.qd.push([qd.x, qd.y]);
    }
    match n_steps {
        Some(steps) => discretize_reference(&out, steps, hip_delay),
        None if hip_delay > 0.0 => Err(Error::InvalidInput("hip_delay needs a step count".into())),
        None => Ok(out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TipDirection {
    NoseUp,
    NoseDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    /// Inside the footprint with a rigid toe.
    Stable,
    /// Ahead of the toe joint: the compliant toe carries the load.
    StableToeSupport,
    /// Between the back claw and the toe joint.
    StablePalmSupport,
    Unstable(TipDirection),
}

impl Stability {
    pub fn is_stable(self) -> bool {
        !matches!(self, Stability::Unstable(_))
    }
}

/// Ground footprint of the foot and where the CoM falls on it (world x, m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportPolygon {
    pub back_claw_x: f64,
    pub toe_joint_x: f64,
    pub toe_tip_x: f64,
    pub com_x: f64,
    pub verdict: Stability,
}

/// Support analysis for a foot resting flat on the ground `y = 0`.
pub fn static_stability(state: &GeneralizedState, p: &RobotParams, toe_joint_locked: bool) -> Result<SupportPolygon> {
    const GROUND_TOL: f64 = 1e-6;
    let k = forward_kinematics(state, p);
    if k.toe_joint.y.abs() > GROUND_TOL || k.claw.y.abs() > GROUND_TOL {
        return Err(Error::FeetNotOnGround(format!(
            "toe joint at y = {:.3e} m, toe tip at y = {:.3e} m",
            k.toe_joint.y, k.claw.y
        )));
    }
    let back = k.foot_end.x.min(k.claw.x);
    let tip = k.foot_end.x.max(k.claw.x);
    let com_x = com_position(state, p).position.x;
    let verdict = if com_x > tip {
        Stability::Unstable(TipDirection::NoseDown)
    } else if com_x < back {
        Stability::Unstable(TipDirection::NoseUp)
    } else if toe_joint_locked {
        Stability::Stable
    } else if com_x > k.toe_joint.x {
        Stability::StableToeSupport
    } else {
        Stability::StablePalmSupport
    };
    Ok(SupportPolygon { back_claw_x: back, toe_joint_x: k.toe_joint.x, toe_tip_x: tip, com_x, verdict })
}
