//! Geometric layer: generalized coordinates, planar rotations, forward
//! kinematics and Jacobians of every point the dynamics and controller use.
//!
//! Angle convention: `q3` is the body pitch (counter-clockwise, nose up).
//! `q4` is measured at the hip relative to the body axis, `q5` at the ankle
//! relative to the upper limb and `q6` at the toe joint relative to the
//! rigid lower-limb/palm extension. Absolute segment angles are cumulative
//! sums starting at `q3`:
//!
//! ```text
//! upper = q3 + q4
//! lower = q3 + q4 + q5
//! palm  = q3 + q4 + q5 + θ3
//! toe   = q3 + q4 + q5 + θ3 + q6
//! ```
//!
//! With the default posture (10°, 135°, 145°) and θ3 = 45° a toe deflection
//! of 25° puts the toe exactly horizontal, so the initial state is flat-toed.

use nalgebra::{DMatrix, DVector, Matrix2, RowVector6, SMatrix, Vector2, Vector6};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::RobotParams;

pub type Jacobian2 = SMatrix<f64, 2, 6>;

/// Six generalized coordinates and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralizedState {
    pub q: Vector6<f64>,
    pub qdot: Vector6<f64>,
}

impl GeneralizedState {
    pub fn new(q: Vector6<f64>, qdot: Vector6<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn at_rest(q: Vector6<f64>) -> Self {
        Self { q, qdot: Vector6::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }

    /// Translates the body reference point by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let mut s = *self;
        s.q[0] += dx;
        s.q[1] += dy;
        s
    }

    pub fn toe_deflection(&self) -> f64 {
        self.q[5]
    }

    /// Builds the resting default posture with the toe joint on the ground line `y = 0`.
    pub fn standing(
        pitch: f64,
        hip: f64,
        ankle: f64,
        toe: f64,
        params: &RobotParams,
    ) -> Self {
        let mut q = Vector6::new(0.0, 0.0, pitch, hip, ankle, toe);
        let toe_joint = chain(BodyPoint::ToeJoint, params).position(&q);
        q[0] = -toe_joint.x;
        q[1] = -toe_joint.y;
        Self::at_rest(q)
    }
}

/// Active foot constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ContactMode {
    /// Toe joint and toe tip pinned to the ground.
    FlatToe,
    /// Toe tip pinned; the body pivots about it.
    ToeTip,
    Airborne,
}

impl ContactMode {
    pub fn constraint_dim(self) -> usize {
        match self {
            ContactMode::FlatToe => 4,
            ContactMode::ToeTip => 2,
            ContactMode::Airborne => 0,
        }
    }

    pub fn is_stance(self) -> bool {
        !matches!(self, ContactMode::Airborne)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ContactMode::FlatToe => "flat_toe",
            ContactMode::ToeTip => "toe_tip",
            ContactMode::Airborne => "airborne",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flat_toe" => Some(ContactMode::FlatToe),
            "toe_tip" => Some(ContactMode::ToeTip),
            "airborne" => Some(ContactMode::Airborne),
            _ => None,
        }
    }
}

impl std::fmt::Display for ContactMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn rot2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// An angle that is an affine function of `q`: `coeffs · q + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleMap {
    pub coeffs: [f64; 6],
    pub offset: f64,
}

impl AngleMap {
    const fn new(coeffs: [f64; 6], offset: f64) -> Self {
        Self { coeffs, offset }
    }

    pub fn angle(&self, q: &Vector6<f64>) -> f64 {
        self.offset + (0..6).map(|i| self.coeffs[i] * q[i]).sum::<f64>()
    }

    pub fn rate(&self, qdot: &Vector6<f64>) -> f64 {
        (0..6).map(|i| self.coeffs[i] * qdot[i]).sum()
    }

    pub fn jacobian(&self) -> RowVector6<f64> {
        RowVector6::from_row_slice(&self.coeffs)
    }
}

const BODY: [f64; 6] = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
const UPPER: [f64; 6] = [0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
const LOWER: [f64; 6] = [0.0, 0.0, 1.0, 1.0, 1.0, 0.0];
const TOE: [f64; 6] = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0];

pub fn body_angle() -> AngleMap {
    AngleMap::new(BODY, 0.0)
}
pub fn upper_angle() -> AngleMap {
    AngleMap::new(UPPER, 0.0)
}
pub fn lower_angle() -> AngleMap {
    AngleMap::new(LOWER, 0.0)
}
pub fn palm_angle(p: &RobotParams) -> AngleMap {
    AngleMap::new(LOWER, p.theta3)
}
pub fn toe_angle(p: &RobotParams) -> AngleMap {
    AngleMap::new(TOE, p.theta3)
}

/// One rigid link of a kinematic chain: `len · (cos φ, sin φ)` with φ affine in q.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    len: f64,
    angle: AngleMap,
}

/// Named points on the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BodyPoint {
    Hip,
    Ankle,
    /// Lower-limb end where the palm starts; carries the hallux (back claw).
    FootEnd,
    ToeJoint,
    Claw,
    BodyCom,
    UpperCom,
    LowerCom,
    PalmCom,
    ToeCom,
    WingCenter,
    TailCenter,
}

/// Position of a point as the hip position plus a sum of rotated links.
#[derive(Debug, Clone)]
pub struct Chain {
    links: [Link; 4],
    n: usize,
}

impl Chain {
    fn new() -> Self {
        let zero = Link { len: 0.0, angle: AngleMap::new([0.0; 6], 0.0) };
        Self { links: [zero; 4], n: 0 }
    }

    fn push(mut self, len: f64, angle: AngleMap) -> Self {
        self.links[self.n] = Link { len, angle };
        self.n += 1;
        self
    }

    /// A body-frame point fixed on the trunk.
    fn body_fixed(offset: Vector2<f64>) -> Self {
        let len = offset.norm();
        let phase = if len > 0.0 { offset.y.atan2(offset.x) } else { 0.0 };
        Self::new().push(len, AngleMap::new(BODY, phase))
    }

    fn links(&self) -> &[Link] {
        &self.links[..self.n]
    }

    pub fn position(&self, q: &Vector6<f64>) -> Vector2<f64> {
        let mut p = Vector2::new(q[0], q[1]);
        for l in self.links() {
            let (s, c) = l.angle.angle(q).sin_cos();
            p += Vector2::new(c, s) * l.len;
        }
        p
    }

    pub fn jacobian(&self, q: &Vector6<f64>) -> Jacobian2 {
        let mut j = Jacobian2::zeros();
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        for l in self.links() {
            let (s, c) = l.angle.angle(q).sin_cos();
            for k in 2..6 {
                let a = l.angle.coeffs[k] * l.len;
                if a != 0.0 {
                    j[(0, k)] -= a * s;
                    j[(1, k)] += a * c;
                }
            }
        }
        j
    }

    /// Time derivative of the Jacobian along `qdot`.
    pub fn jacobian_dot(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> Jacobian2 {
        let mut j = Jacobian2::zeros();
        for l in self.links() {
            let (s, c) = l.angle.angle(q).sin_cos();
            let w = l.angle.rate(qdot);
            for k in 2..6 {
                let a = l.angle.coeffs[k] * l.len * w;
                if a != 0.0 {
                    j[(0, k)] -= a * c;
                    j[(1, k)] -= a * s;
                }
            }
        }
        j
    }

    /// `J̇ q̇`, the velocity-product part of the point acceleration.
    pub fn jdot_qdot(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> Vector2<f64> {
        let mut a = Vector2::zeros();
        for l in self.links() {
            let (s, c) = l.angle.angle(q).sin_cos();
            let w = l.angle.rate(qdot);
            a -= Vector2::new(c, s) * (l.len * w * w);
        }
        a
    }

    pub fn velocity(&self, q: &Vector6<f64>, qdot: &Vector6<f64>) -> Vector2<f64> {
        self.jacobian(q) * qdot
    }
}

pub fn chain(point: BodyPoint, p: &RobotParams) -> Chain {
    let ankle = || Chain::new().push(p.l1, upper_angle());
    let foot_end = || ankle().push(p.l2, lower_angle());
    let toe_joint = || foot_end().push(p.l3, palm_angle(p));
    match point {
        BodyPoint::Hip => Chain::new(),
        BodyPoint::Ankle => ankle(),
        BodyPoint::FootEnd => foot_end(),
        BodyPoint::ToeJoint => toe_joint(),
        BodyPoint::Claw => toe_joint().push(p.l4, toe_angle(p)),
        BodyPoint::BodyCom => Chain::body_fixed(p.body_com_offset),
        BodyPoint::UpperCom => Chain::new().push(0.5 * p.l1, upper_angle()),
        BodyPoint::LowerCom => ankle().push(0.5 * p.l2, lower_angle()),
        BodyPoint::PalmCom => foot_end().push(0.5 * p.l3, palm_angle(p)),
        BodyPoint::ToeCom => toe_joint().push(0.5 * p.l4, toe_angle(p)),
        BodyPoint::WingCenter => Chain::body_fixed(p.wing_center),
        BodyPoint::TailCenter => Chain::body_fixed(p.tail_center),
    }
}

/// A rigid segment with its mass properties.
#[derive(Debug, Clone)]
pub struct Segment {
    pub name: &'static str,
    pub com: Chain,
    pub angle: AngleMap,
    pub mass: f64,
    /// Rotational inertia about the segment CoM (kg·m²).
    pub inertia: f64,
}

/// Body, upper limb, lower limb, palm and toe, with slender-rod inertias.
pub fn segments(p: &RobotParams) -> [Segment; 5] {
    let rod = |m: f64, l: f64| m * l * l / 12.0;
    [
        Segment {
            name: "body",
            com: chain(BodyPoint::BodyCom, p),
            angle: body_angle(),
            mass: p.m_body,
            inertia: rod(p.m_body, p.body_length),
        },
        Segment {
            name: "upper",
            com: chain(BodyPoint::UpperCom, p),
            angle: upper_angle(),
            mass: p.m_upper,
            inertia: rod(p.m_upper, p.l1),
        },
        Segment {
            name: "lower",
            com: chain(BodyPoint::LowerCom, p),
            angle: lower_angle(),
            mass: p.m_lower,
            inertia: rod(p.m_lower, p.l2),
        },
        Segment {
            name: "palm",
            com: chain(BodyPoint::PalmCom, p),
            angle: palm_angle(p),
            mass: p.m_palm,
            inertia: rod(p.m_palm, p.l3),
        },
        Segment {
            name: "toe",
            com: chain(BodyPoint::ToeCom, p),
            angle: toe_angle(p),
            mass: p.m_toe,
            inertia: rod(p.m_toe, p.l4),
        },
    ]
}

/// World positions of the joints, contact points and segment CoMs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kinematics {
    pub hip: Vector2<f64>,
    pub ankle: Vector2<f64>,
    pub foot_end: Vector2<f64>,
    pub toe_joint: Vector2<f64>,
    pub claw: Vector2<f64>,
    pub body_com: Vector2<f64>,
    pub upper_com: Vector2<f64>,
    pub lower_com: Vector2<f64>,
    pub palm_com: Vector2<f64>,
    pub toe_com: Vector2<f64>,
}

pub fn forward_kinematics(state: &GeneralizedState, p: &RobotParams) -> Kinematics {
    let at = |pt| chain(pt, p).position(&state.q);
    Kinematics {
        hip: at(BodyPoint::Hip),
        ankle: at(BodyPoint::Ankle),
        foot_end: at(BodyPoint::FootEnd),
        toe_joint: at(BodyPoint::ToeJoint),
        claw: at(BodyPoint::Claw),
        body_com: at(BodyPoint::BodyCom),
        upper_com: at(BodyPoint::UpperCom),
        lower_com: at(BodyPoint::LowerCom),
        palm_com: at(BodyPoint::PalmCom),
        toe_com: at(BodyPoint::ToeCom),
    }
}

fn contact_chains(p: &RobotParams, mode: ContactMode) -> Result<Vec<Chain>> {
    match mode {
        ContactMode::FlatToe => Ok(vec![chain(BodyPoint::ToeJoint, p), chain(BodyPoint::Claw, p)]),
        ContactMode::ToeTip => Ok(vec![chain(BodyPoint::Claw, p)]),
        ContactMode::Airborne => Err(Error::NoActiveConstraints),
    }
}

/// Stacked constraint-point positions `p_c`.
pub fn constraint_positions(
    state: &GeneralizedState,
    p: &RobotParams,
    mode: ContactMode,
) -> Result<DVector<f64>> {
    let chains = contact_chains(p, mode)?;
    let mut out = DVector::zeros(2 * chains.len());
    for (i, c) in chains.iter().enumerate() {
        out.fixed_rows_mut::<2>(2 * i).copy_from(&c.position(&state.q));
    }
    Ok(out)
}

/// Constraint Jacobian with its time derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintJacobian {
    pub j: DMatrix<f64>,
    pub jdot: DMatrix<f64>,
    pub jdot_qdot: DVector<f64>,
}

pub fn constraint_jacobian(
    state: &GeneralizedState,
    p: &RobotParams,
    mode: ContactMode,
) -> Result<ConstraintJacobian> {
    let chains = contact_chains(p, mode)?;
    let rows = 2 * chains.len();
    let mut j = DMatrix::zeros(rows, 6);
    let mut jdot = DMatrix::zeros(rows, 6);
    let mut jdq = DVector::zeros(rows);
    for (i, c) in chains.iter().enumerate() {
        j.fixed_view_mut::<2, 6>(2 * i, 0).copy_from(&c.jacobian(&state.q));
        jdot.fixed_view_mut::<2, 6>(2 * i, 0)
            .copy_from(&c.jacobian_dot(&state.q, &state.qdot));
        jdq.fixed_rows_mut::<2>(2 * i)
            .copy_from(&c.jdot_qdot(&state.q, &state.qdot));
    }
    Ok(ConstraintJacobian { j, jdot, jdot_qdot: jdq })
}

/// Whole-robot centre of mass and its velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComState {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
}

pub fn com_position(state: &GeneralizedState, p: &RobotParams) -> ComState {
    let segs = segments(p);
    let total: f64 = segs.iter().map(|s| s.mass).sum();
    let mut pos = Vector2::zeros();
    let mut vel = Vector2::zeros();
    for s in &segs {
        pos += s.com.position(&state.q) * s.mass;
        vel += s.com.velocity(&state.q, &state.qdot) * s.mass;
    }
    ComState { position: pos / total, velocity: vel / total }
}

/// CoM Jacobian and `J̇ q̇` of the CoM.
pub fn com_jacobian(state: &GeneralizedState, p: &RobotParams) -> (Jacobian2, Vector2<f64>) {
    let segs = segments(p);
    let total: f64 = segs.iter().map(|s| s.mass).sum();
    let mut j = Jacobian2::zeros();
    let mut jdq = Vector2::zeros();
    for s in &segs {
        j += s.com.jacobian(&state.q) * s.mass;
        jdq += s.com.jdot_qdot(&state.q, &state.qdot) * s.mass;
    }
    (j / total, jdq / total)
}

/// A scalar task coordinate with its rate and Jacobian row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskValue {
    pub value: f64,
    pub rate: f64,
    pub jacobian: RowVector6<f64>,
    pub jdot_qdot: f64,
}

/// Pitch, CoM-horizontal and CoM-vertical task coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskValues {
    pub pitch: TaskValue,
    pub horizontal: TaskValue,
    pub vertical: TaskValue,
}

pub fn task_values(state: &GeneralizedState, p: &RobotParams) -> TaskValues {
    let com = com_position(state, p);
    let (j, jdq) = com_jacobian(state, p);
    TaskValues {
        pitch: TaskValue {
            value: state.q[2],
            rate: state.qdot[2],
            jacobian: body_angle().jacobian(),
            jdot_qdot: 0.0,
        },
        horizontal: TaskValue {
            value: com.position.x,
            rate: com.velocity.x,
            jacobian: j.row(0).into_owned(),
            jdot_qdot: jdq.x,
        },
        vertical: TaskValue {
            value: com.position.y,
            rate: com.velocity.y,
            jacobian: j.row(1).into_owned(),
            jdot_qdot: jdq.y,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn default_state() -> GeneralizedState {
        let p = RobotParams::default();
        let d = PI / 180.0;
        GeneralizedState::standing(10.0 * d, 135.0 * d, 145.0 * d, 25.0 * d, &p)
    }

    #[test]
    fn rot2_cases() {
        assert_eq!(rot2(0.0), Matrix2::identity());
        let r = rot2(FRAC_PI_2);
        assert!((r - Matrix2::new(0.0, -1.0, 1.0, 0.0)).norm() < 1e-15);
        assert!((rot2(0.7) * rot2(-0.7) - Matrix2::identity()).norm() < 1e-15);
        assert!((rot2(1.3).determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn straight_chain_is_plain_sum() {
        // Leg straight down with the palm and toe continuing the line.
        let p = RobotParams { theta3: 0.0, ..Default::default() };
        let q = Vector6::new(0.0, 0.0, 0.0, -FRAC_PI_2, 0.0, 0.0);
        let k = forward_kinematics(&GeneralizedState::at_rest(q), &p);
        assert!((k.toe_joint - Vector2::new(0.0, -(p.l1 + p.l2 + p.l3))).norm() < 1e-15);
        assert!((k.claw - Vector2::new(0.0, -(p.l1 + p.l2 + p.l3 + p.l4))).norm() < 1e-15);
    }

    #[test]
    fn default_posture_by_hand() {
        // Hand-composed chain: absolute angles 145°, 290°, 335°, 360°.
        let p = RobotParams::default();
        let s = default_state();
        let k = forward_kinematics(&s, &p);
        let d = PI / 180.0;
        let rel_toe = Vector2::new(
            0.12 * (145.0 * d).cos() + 0.12 * (290.0 * d).cos() + 0.023 * (335.0 * d).cos(),
            0.12 * (145.0 * d).sin() + 0.12 * (290.0 * d).sin() + 0.023 * (335.0 * d).sin(),
        );
        assert!((k.toe_joint - k.hip - rel_toe).norm() < 1e-14);
        assert!((k.claw - k.toe_joint - Vector2::new(0.06, 0.0)).norm() < 1e-14);
        // toe joint placed on the ground line, toe flat
        assert!(k.toe_joint.norm() < 1e-15);
        assert!(k.claw.y.abs() < 1e-15);
        assert!((rel_toe - Vector2::new(-0.036411, -0.053654)).norm() < 1e-5);
    }

    #[test]
    fn airborne_has_no_constraints() {
        let p = RobotParams::default();
        let s = default_state();
        assert_eq!(
            constraint_positions(&s, &p, ContactMode::Airborne),
            Err(Error::NoActiveConstraints)
        );
        assert!(constraint_jacobian(&s, &p, ContactMode::Airborne).is_err());
    }

    #[test]
    fn constraint_dimensions_and_content() {
        let p = RobotParams::default();
        let s = default_state();
        let k = forward_kinematics(&s, &p);
        let flat = constraint_positions(&s, &p, ContactMode::FlatToe).unwrap();
        assert_eq!(flat.len(), 4);
        assert_eq!(flat[0], k.toe_joint.x);
        assert_eq!(flat[1], k.toe_joint.y);
        let tip = constraint_positions(&s, &p, ContactMode::ToeTip).unwrap();
        assert_eq!(tip.len(), 2);
        assert_eq!(tip[0], k.claw.x);
        assert_eq!(tip[1], k.claw.y);
    }

    #[test]
    fn translation_columns_identity() {
        let p = RobotParams::default();
        let s = default_state();
        let cj = constraint_jacobian(&s, &p, ContactMode::FlatToe).unwrap();
        for r in 0..4 {
            assert_eq!(cj.j[(r, 0)], if r % 2 == 0 { 1.0 } else { 0.0 });
            assert_eq!(cj.j[(r, 1)], if r % 2 == 1 { 1.0 } else { 0.0 });
        }
        assert_eq!(cj.jdot_qdot.norm(), 0.0);
    }

    #[test]
    fn com_with_massless_limbs_is_body_com() {
        let p = RobotParams {
            m_upper: 0.0,
            m_lower: 0.0,
            m_palm: 0.0,
            m_toe: 0.0,
            ..Default::default()
        };
        let s = default_state();
        let com = com_position(&s, &p);
        let k = forward_kinematics(&s, &p);
        assert!((com.position - k.body_com).norm() < 1e-15);
    }

    #[test]
    fn pitch_task_row() {
        let p = RobotParams::default();
        let t = task_values(&default_state(), &p);
        assert_eq!(t.pitch.jacobian, RowVector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn reduced_model_horizontal_jacobian() {
        // Only the body carries mass: x_com = q1 + cx cos q3 - cy sin q3.
        let p = RobotParams {
            m_upper: 0.0,
            m_lower: 0.0,
            m_palm: 0.0,
            m_toe: 0.0,
            ..Default::default()
        };
        let s = default_state();
        let t = task_values(&s, &p);
        let (cx, cy) = (p.body_com_offset.x, p.body_com_offset.y);
        let lever = -cx * s.q[2].sin() - cy * s.q[2].cos();
        let expected = RowVector6::new(1.0, 0.0, lever, 0.0, 0.0, 0.0);
        assert!((t.horizontal.jacobian - expected).norm() < 1e-15);
    }
}
