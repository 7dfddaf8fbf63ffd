//! Prioritized task-space control for the stance phase.
//!
//! Task accelerations come from a PD law, are resolved into a joint-space
//! acceleration by the null-space recursion, and are turned into hip and
//! ankle torques by projecting the equations of motion onto the
//! constraint-force-free subspace of `J_cᵀ`.

use nalgebra::{DMatrix, DVector, Vector2, Vector6};
use serde::Serialize;

use crate::dynamics::{
    active_constraints, bias_forces, mass_matrix, selection_matrix, ActiveConstraints,
    Baumgarte, ContactAnchor,
};
use crate::error::{Error, Result};
use crate::linalg::{range_basis, triangular_rank};
use crate::model::{com_position, task_values, ContactMode, GeneralizedState, TaskValue};
use crate::params::RobotParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TaskId {
    Pitch,
    Horizontal,
    Vertical,
}

impl TaskId {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Pitch => "pitch",
            TaskId::Horizontal => "horizontal",
            TaskId::Vertical => "vertical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "pitch" => Some(TaskId::Pitch),
            "horizontal" => Some(TaskId::Horizontal),
            "vertical" => Some(TaskId::Vertical),
            _ => None,
        }
    }
}

/// One scalar (or stacked) task with its references and gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub priority: usize,
    pub x_d: f64,
    pub xdot_d: f64,
    /// Reference acceleration added to the PD term.
    pub xddot_ff: f64,
    pub kp: f64,
    pub kd: f64,
    pub x: f64,
    pub xdot: f64,
    pub jacobian: DMatrix<f64>,
    pub jdot_qdot: DVector<f64>,
}

impl Task {
    pub fn from_value(id: TaskId, priority: usize, v: &TaskValue, gains: Gains) -> Self {
        Self {
            id,
            priority,
            x_d: v.value,
            xdot_d: v.rate,
            xddot_ff: 0.0,
            kp: gains.kp,
            kd: gains.kd,
            x: v.value,
            xdot: v.rate,
            jacobian: DMatrix::from_row_slice(1, 6, v.jacobian.as_slice()),
            jdot_qdot: DVector::from_element(1, v.jdot_qdot),
        }
    }

    pub fn with_reference(mut self, x_d: f64, xdot_d: f64, xddot_ff: f64) -> Self {
        self.x_d = x_d;
        self.xdot_d = xdot_d;
        self.xddot_ff = xddot_ff;
        self
    }

    /// `b = ẍ_d − J̇ q̇`.
    pub fn rhs(&self) -> DVector<f64> {
        DVector::from_element(self.jacobian.nrows(), task_pd(self)) - &self.jdot_qdot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self { kp: 400.0, kd: 40.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlConfig {
    /// Pseudoinverse damping.
    pub lambda: f64,
    pub priority: Vec<TaskId>,
    pub pitch_gains: Gains,
    pub horizontal_gains: Gains,
    pub vertical_gains: Gains,
    /// Resolve the contact constraint ahead of every task.
    pub constraint_first: bool,
    /// Derate the torque limit linearly to zero at the joint no-load speed.
    pub speed_derating: bool,
    /// Treat the ankle spring torque as known when extracting torques.
    pub spring_compensation: bool,
    /// Treat the commanded propeller force as known when extracting torques.
    pub thrust_compensation: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-6,
            priority: vec![TaskId::Pitch, TaskId::Horizontal, TaskId::Vertical],
            pitch_gains: Gains::default(),
            horizontal_gains: Gains::default(),
            vertical_gains: Gains::default(),
            constraint_first: true,
            speed_derating: false,
            spring_compensation: false,
            thrust_compensation: true,
        }
    }
}

impl ControlConfig {
    pub fn gains(&self, id: TaskId) -> Gains {
        match id {
            TaskId::Pitch => self.pitch_gains,
            TaskId::Horizontal => self.horizontal_gains,
            TaskId::Vertical => self.vertical_gains,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let mut seen = self.priority.clone();
        seen.sort_by_key(|t| t.as_str());
        seen.dedup();
        if seen.len() != self.priority.len() || self.priority.is_empty() {
            return Err(Error::InvalidInput("priority order must list distinct tasks".into()));
        }
        for id in &self.priority {
            let g = self.gains(*id);
            if !(g.kp >= 0.0 && g.kd >= 0.0) {
                return Err(Error::InvalidInput(format!("{} gains must be >= 0", id.as_str())));
            }
        }
        Ok(())
    }
}

/// `ẍ_d = k_p (x_d − x) + k_d (ẋ_d − ẋ)` plus the reference acceleration.
pub fn task_pd(task: &Task) -> f64 {
    task.xddot_ff + task.kp * (task.x_d - task.x) + task.kd * (task.xdot_d - task.xdot)
}

/// Damped least-squares inverse `Aᵀ (λI + AAᵀ)⁻¹`.
///
/// Evaluated as the least-squares solution of `[A; √λ I] x = [b; 0]` by QR,
/// which avoids forming the squared Gram matrix.
pub fn damped_pinv(a: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("damping must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        if m > n {
            return Err(Error::RankDeficiencyRequiresDamping);
        }
        // Aᵀ = QR gives A⁺ = Q R⁻ᵀ.
        let qr = a.transpose().qr();
        let r = qr.r();
        if triangular_rank(&r, 1e-12) < m {
            return Err(Error::RankDeficiencyRequiresDamping);
        }
        let z = r
            .transpose()
            .solve_lower_triangular(&DMatrix::identity(m, m))
            .ok_or(Error::RankDeficiencyRequiresDamping)?;
        return Ok(qr.q() * z);
    }
    let mut k = DMatrix::zeros(m + n, n);
    k.rows_mut(0, m).copy_from(a);
    k.rows_mut(m, n).fill_diagonal(lambda.sqrt());
    let qr = k.qr();
    let q_top = qr.q().rows(0, m).transpose();
    qr.r().solve_upper_triangular(&q_top).ok_or(Error::RankDeficiencyRequiresDamping)
}

/// `N = I − J_A⁺ J_A`.
pub fn nullspace(ja: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let k = ja.ncols();
    let pinv = damped_pinv(ja, lambda)?;
    Ok(DMatrix::identity(k, k) - pinv * ja)
}

/// Orthogonal projector onto the null space of `J_A`, `I − B Bᵀ` with `B` an
/// orthonormal basis of the row space.
pub fn null_projector(ja: &DMatrix<f64>) -> DMatrix<f64> {
    let b = range_basis(&ja.transpose(), 1e-10);
    DMatrix::identity(ja.ncols(), ja.ncols()) - &b * b.transpose()
}

/// Joint acceleration realising the tasks in priority order.
///
/// `seed` optionally places rows `J_0 q̈ = b_0` above every task (the contact
/// constraint in stance); otherwise `q̈_0 = 0`, `N_0 = I`.
pub fn prioritized_accel(
    tasks: &[Task],
    seed: Option<(&DMatrix<f64>, &DVector<f64>)>,
    lambda: f64,
) -> Result<Vector6<f64>> {
    let mut order: Vec<&Task> = tasks.iter().collect();
    order.sort_by_key(|t| t.priority);
    let (mut qdd, mut stacked, mut n_prev) = match seed {
        Some((j0, b0)) => {
            (damped_pinv(j0, lambda)? * b0, Some(j0.clone()), null_projector(j0))
        }
        None => (DVector::zeros(6), None, DMatrix::identity(6, 6)),
    };
    for task in order {
        let j = &task.jacobian;
        let jn = j * &n_prev;
        qdd += damped_pinv(&jn, lambda)? * (task.rhs() - j * &qdd);
        let ja = match stacked.take() {
            Some(s) => {
                let mut m = DMatrix::zeros(s.nrows() + j.nrows(), 6);
                m.rows_mut(0, s.nrows()).copy_from(&s);
                m.rows_mut(s.nrows(), j.nrows()).copy_from(j);
                m
            }
            None => j.clone(),
        };
        n_prev = null_projector(&ja);
        stacked = Some(ja);
    }
    Ok(Vector6::from_iterator(qdd.iter().copied()))
}

/// Full orthogonal factor of a 6×c matrix by Householder QR.
pub fn householder_q(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, c) = a.shape();
    let mut padded = DMatrix::zeros(n, n);
    padded.columns_mut(0, c).copy_from(a);
    let qr = padded.qr();
    let q = qr.q();
    let r = qr.r().rows(0, c).columns(0, c).into_owned();
    (q, r)
}

/// Full orthogonal factor by modified Gram–Schmidt, completed with unit vectors.
pub fn gram_schmidt_q(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, c) = a.shape();
    let mut q = DMatrix::zeros(n, n);
    let mut r = DMatrix::zeros(c, c);
    let mut filled = 0;
    for k in 0..c {
        let mut v = a.column(k).into_owned();
        for i in 0..filled {
            let rik = q.column(i).dot(&v);
            r[(i, k)] = rik;
            v -= q.column(i) * rik;
        }
        let norm = v.norm();
        r[(k, k)] = norm;
        if norm > 1e-12 {
            q.set_column(filled, &(v / norm));
        }
        filled += 1;
    }
    for e in 0..n {
        if filled == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        for _ in 0..2 {
            for i in 0..filled {
                let d = q.column(i).dot(&v);
                v -= q.column(i) * d;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            q.set_column(filled, &(v / norm));
            filled += 1;
        }
    }
    (q, r)
}

pub type QrFn = fn(&DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>);

/// Hip and ankle torques realising `q̈_d` with any contact force.
///
/// `τ = (S_u Qᵀ Sᵀ)⁺ S_u Qᵀ (M q̈_d + C q̇ + g)` where `Jᵀ = Q [R; 0]`.
pub fn torque_extraction(
    qddot_d: &Vector6<f64>,
    state: &GeneralizedState,
    p: &RobotParams,
    ac: &ActiveConstraints,
) -> Result<Vector2<f64>> {
    torque_extraction_with(qddot_d, state, p, ac, householder_q)
}

pub fn torque_extraction_with(
    qddot_d: &Vector6<f64>,
    state: &GeneralizedState,
    p: &RobotParams,
    ac: &ActiveConstraints,
    qr: QrFn,
) -> Result<Vector2<f64>> {
    torque_extraction_known(qddot_d, state, p, ac, &Vector6::zeros(), qr)
}

/// As [`torque_extraction_with`], with a known generalized force `f_known`
/// moved to the right-hand side: `M q̈_d + C q̇ + g − f_known`.
pub fn torque_extraction_known(
    qddot_d: &Vector6<f64>,
    state: &GeneralizedState,
    p: &RobotParams,
    ac: &ActiveConstraints,
    f_known: &Vector6<f64>,
    qr: QrFn,
) -> Result<Vector2<f64>> {
    let jt = ac.j.transpose();
    let c = jt.ncols();
    let (q, r) = qr(&jt);
    let diag_max = (0..c).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let rank = (0..c).filter(|&i| r[(i, i)].abs() > 1e-9 * diag_max.max(1e-12)).count();
    if rank < c {
        return Err(Error::ConstraintRankDeficient { rank, expected: c });
    }
    let su_qt = q.columns(c, 6 - c).transpose();
    let s_t = DMatrix::from_fn(6, 2, |i, j| selection_matrix()[(j, i)]);
    let a = &su_qt * s_t;
    let rhs_full = mass_matrix(state, p) * qddot_d + bias_forces(state, p) - f_known;
    let rhs = &su_qt * DVector::from_column_slice(rhs_full.as_slice());
    let ls = a.qr();
    let r = ls.r();
    if triangular_rank(&r, 1e-12) < 2 {
        return Err(Error::ConstraintRankDeficient { rank, expected: c });
    }
    let tau = r
        .solve_upper_triangular(&(ls.q().transpose() * rhs))
        .ok_or(Error::ConstraintRankDeficient { rank, expected: c })?;
    Ok(Vector2::new(tau[0], tau[1]))
}

/// How the CoM ramp is parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RampProfile {
    /// Position and velocity scheduled in time from the start of stance.
    Time,
    /// Velocity scheduled by the displacement along the jump direction, `v² = 2 a s`.
    Displacement,
}

impl RampProfile {
    pub fn as_str(self) -> &'static str {
        match self {
            RampProfile::Time => "time",
            RampProfile::Displacement => "displacement",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "time" => Some(RampProfile::Time),
            "displacement" => Some(RampProfile::Displacement),
            _ => None,
        }
    }
}

/// Ramp-to-speed reference for the CoM with a constant pitch target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TakeoffReference {
    pub profile: RampProfile,
    pub pitch: f64,
    pub speed: f64,
    /// Ramp acceleration along the jump direction (m/s²).
    pub accel: f64,
    /// Jump direction angle from horizontal (rad); `None` uses the toe-joint → hip line.
    pub direction: Option<f64>,
    pub gravity: f64,
}

impl Default for TakeoffReference {
    fn default() -> Self {
        Self {
            profile: RampProfile::Displacement,
            pitch: 10f64.to_radians(),
            speed: 2.5,
            accel: 13.8,
            direction: Some(63.5f64.to_radians()),
            gravity: crate::params::GRAVITY,
        }
    }
}

/// CoM reference position, velocity and acceleration at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComReference {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub accel: Vector2<f64>,
}

/// Reference trajectory anchored at the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TakeoffPlan {
    pub reference: TakeoffReference,
    pub start: Vector2<f64>,
    pub direction: Vector2<f64>,
}

impl TakeoffPlan {
    pub fn new(reference: &TakeoffReference, initial: &GeneralizedState, p: &RobotParams) -> Self {
        let angle = reference.direction.unwrap_or_else(|| {
            let k = crate::model::forward_kinematics(initial, p);
            let d = k.hip - k.toe_joint;
            d.y.atan2(d.x)
        });
        Self {
            reference: reference.clone(),
            start: com_position(initial, p).position,
            direction: Vector2::new(angle.cos(), angle.sin()),
        }
    }

    pub fn ramp_time(&self) -> f64 {
        self.reference.speed / self.reference.accel
    }

    /// Ramp length along the jump direction.
    pub fn stroke(&self) -> f64 {
        self.reference.speed * self.reference.speed / (2.0 * self.reference.accel)
    }

    /// Reference for the current CoM position and velocity.
    pub fn com_at(&self, t: f64, position: Vector2<f64>, velocity: Vector2<f64>) -> ComReference {
        match self.reference.profile {
            RampProfile::Time => self.com(t),
            RampProfile::Displacement => self.com_along(position, velocity),
        }
    }

    /// Displacement-scheduled ramp; past the stroke the CoM is left ballistic.
    pub fn com_along(&self, position: Vector2<f64>, velocity: Vector2<f64>) -> ComReference {
        let r = &self.reference;
        let s = (position - self.start).dot(&self.direction);
        if s < self.stroke() {
            ComReference {
                position: self.start + self.direction * s,
                velocity: self.direction * (2.0 * r.accel * s.max(0.0)).sqrt(),
                accel: self.direction * r.accel,
            }
        } else {
            ComReference { position, velocity, accel: Vector2::new(0.0, -r.gravity) }
        }
    }

    pub fn com(&self, t: f64) -> ComReference {
        let r = &self.reference;
        let tr = self.ramp_time();
        if t <= tr {
            ComReference {
                position: self.start + self.direction * (0.5 * r.accel * t * t),
                velocity: self.direction * (r.accel * t),
                accel: self.direction * r.accel,
            }
        } else {
            let dt = t - tr;
            let g = Vector2::new(0.0, -r.gravity);
            let p0 = self.start + self.direction * (0.5 * r.accel * tr * tr);
            let v0 = self.direction * r.speed;
            ComReference {
                position: p0 + v0 * dt + g * (0.5 * dt * dt),
                velocity: v0 + g * dt,
                accel: g,
            }
        }
    }
}

/// Per-step controller output.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub tau: Vector2<f64>,
    /// Torque before saturation.
    pub tau_raw: Vector2<f64>,
    pub qddot_d: Vector6<f64>,
}

/// Builds the pitch/horizontal/vertical tasks for time `t`.
pub fn takeoff_tasks(
    t: f64,
    state: &GeneralizedState,
    p: &RobotParams,
    cfg: &ControlConfig,
    plan: &TakeoffPlan,
) -> Vec<Task> {
    let tv = task_values(state, p);
    let r = plan.com_at(
        t,
        Vector2::new(tv.horizontal.value, tv.vertical.value),
        Vector2::new(tv.horizontal.rate, tv.vertical.rate),
    );
    cfg.priority
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let (v, x_d, xd_d, ff) = match id {
                TaskId::Pitch => (&tv.pitch, plan.reference.pitch, 0.0, 0.0),
                TaskId::Horizontal => (&tv.horizontal, r.position.x, r.velocity.x, r.accel.x),
                TaskId::Vertical => (&tv.vertical, r.position.y, r.velocity.y, r.accel.y),
            };
            Task::from_value(*id, i + 1, v, cfg.gains(*id)).with_reference(x_d, xd_d, ff)
        })
        .collect()
}

pub fn saturate(tau: &Vector2<f64>, limit: f64) -> Vector2<f64> {
    tau.map(|v| v.clamp(-limit, limit))
}

/// Per-joint torque limit, optionally derated linearly with joint speed.
pub fn torque_limits(state: &GeneralizedState, p: &RobotParams, speed_derating: bool) -> Vector2<f64> {
    let stall = p.joint_torque_limit();
    if !speed_derating {
        return Vector2::new(stall, stall);
    }
    let w = p.joint_speed_limit();
    Vector2::new(state.qdot[3], state.qdot[4]).map(|qd| stall * (1.0 - qd.abs() / w).max(0.0))
}

pub fn saturate_each(tau: &Vector2<f64>, limits: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(tau[0].clamp(-limits[0], limits[0]), tau[1].clamp(-limits[1], limits[1]))
}

/// Stance torques at time `t`.
///
/// `known` is the generalized external force the controller accounts for
/// (see [`ControlConfig::spring_compensation`] and
/// [`ControlConfig::thrust_compensation`]); the caller assembles it.
#[allow(clippy::too_many_arguments)]
pub fn takeoff_controller(
    t: f64,
    state: &GeneralizedState,
    p: &RobotParams,
    cfg: &ControlConfig,
    plan: &TakeoffPlan,
    mode: ContactMode,
    anchor: Option<&ContactAnchor>,
    baumgarte: Baumgarte,
    known: &Vector6<f64>,
) -> Result<ControlOutput> {
    let ac = active_constraints(state, p, mode, anchor)?;
    let tasks = takeoff_tasks(t, state, p, cfg, plan);
    let seed = if cfg.constraint_first {
        let b = -&ac.jdot_qdot
            - (&ac.j * state.qdot) * baumgarte.damping()
            - &ac.error * baumgarte.stiffness();
        Some(b)
    } else {
        None
    };
    let qddot_d = prioritized_accel(&tasks, seed.as_ref().map(|b| (&ac.j, b)), cfg.lambda)?;
    let tau_raw = torque_extraction_known(&qddot_d, state, p, &ac, known, householder_q)?;
    Ok(ControlOutput {
        tau: saturate_each(&tau_raw, &torque_limits(state, p, cfg.speed_derating)),
        tau_raw,
        qddot_d,
    })
}

/// PD gains holding the leg joints during flight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for HoldGains {
    fn default() -> Self {
        Self { kp: 1200.0, kd: 0.3 }
    }
}

/// Joint-hold torques toward `(hip, ankle)` targets.
pub fn hold_torques(
    state: &GeneralizedState,
    target: &Vector2<f64>,
    gains: HoldGains,
    p: &RobotParams,
) -> Vector2<f64> {
    let q = Vector2::new(state.q[3], state.q[4]);
    let qd = Vector2::new(state.qdot[3], state.qdot[4]);
    let tau = (target - q) * gains.kp - qd * gains.kd;
    saturate(&tau, p.joint_torque_limit())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(kp: f64, kd: f64, e: f64, ed: f64) -> Task {
        Task {
            id: TaskId::Pitch,
            priority: 1,
            x_d: e,
            xdot_d: ed,
            xddot_ff: 0.0,
            kp,
            kd,
            x: 0.0,
            xdot: 0.0,
            jacobian: DMatrix::zeros(1, 6),
            jdot_qdot: DVector::zeros(1),
        }
    }

    #[test]
    fn pd_examples() {
        assert_eq!(task_pd(&task(100.0, 20.0, 0.0, 0.0)), 0.0);
        assert!((task_pd(&task(100.0, 20.0, 0.1, 0.0)) - 10.0).abs() < 1e-12);
        assert!((task_pd(&task(100.0, 20.0, 0.0, 0.5)) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn pinv_examples() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((damped_pinv(&i, 0.0).unwrap() - &i).norm() < 1e-15);
        let a = DMatrix::from_element(1, 1, 2.0);
        assert!((damped_pinv(&a, 1.0).unwrap()[(0, 0)] - 0.4).abs() < 1e-15);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(damped_pinv(&s, 0.0).err(), Some(Error::RankDeficiencyRequiresDamping));
    }

    #[test]
    fn nullspace_examples() {
        let j = DMatrix::from_row_slice(1, 6, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let n = nullspace(&j, 0.0).unwrap();
        let mut expect = DMatrix::identity(6, 6);
        expect[(0, 0)] = 0.0;
        assert!((n - expect).norm() < 1e-15);
        let sq = DMatrix::from_fn(6, 6, |r, c| if r == c { 2.0 } else { 0.1 * (r + c) as f64 });
        assert!(nullspace(&sq, 0.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn qr_factors_agree_on_span() {
        let a = DMatrix::from_fn(6, 3, |r, c| ((r * 3 + c) as f64).sin() + if r == c { 2.0 } else { 0.0 });
        for f in [householder_q as QrFn, gram_schmidt_q] {
            let (q, r) = f(&a);
            assert!((q.transpose() * &q - DMatrix::identity(6, 6)).norm() < 1e-12);
            let top = q.columns(0, 3) * &r;
            assert!((top - &a).norm() < 1e-12);
            assert!((q.columns(3, 3).transpose() * &a).norm() < 1e-12);
        }
    }

    #[test]
    fn reference_is_continuous_at_ramp_end() {
        let p = RobotParams::default();
        let s = GeneralizedState::standing(
            10f64.to_radians(),
            135f64.to_radians(),
            145f64.to_radians(),
            25f64.to_radians(),
            &p,
        );
        let reference = TakeoffReference { profile: RampProfile::Time, ..Default::default() };
        let plan = TakeoffPlan::new(&reference, &s, &p);
        let tr = plan.ramp_time();
        let a = plan.com(tr - 1e-9);
        let b = plan.com(tr + 1e-9);
        assert!((a.position - b.position).norm() < 1e-8);
        assert!((a.velocity - b.velocity).norm() < 1e-6);
        assert!((b.velocity.norm() - 2.5).abs() < 1e-6);
        assert!(plan.direction.y > 0.0);
    }
}
