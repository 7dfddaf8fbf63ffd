//! Equations of motion for stance (contact-constrained) and flight.
//!
//! `M(q) q̈ + C(q, q̇) q̇ + g(q) = Sᵀ τ + f_ext + J_cᵀ λ`
//!
//! where `λ` is the ground reaction acting on the robot at the active contact
//! points. The Coriolis matrix is assembled as `Σ m J_vᵀ J̇_v`, which makes
//! `Ṁ − 2C` skew-symmetric.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix6, SMatrix, Vector2, Vector6};

use crate::aero::{surface_force, AeroModel, FlatPlate};
use crate::error::{Error, Result};
use crate::linalg::range_basis;
use crate::model::{
    chain, constraint_jacobian, constraint_positions, segments, BodyPoint, ContactMode,
    GeneralizedState,
};
use crate::params::RobotParams;

pub type Selection = SMatrix<f64, 2, 6>;

/// `τ = (τ_hip, τ_ankle)` enters the q4 and q5 rows.
pub fn selection_matrix() -> Selection {
    let mut s = Selection::zeros();
    s[(0, 3)] = 1.0;
    s[(1, 4)] = 1.0;
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTerms {
    pub mass: Matrix6<f64>,
    /// `C(q, q̇) q̇ + g(q)`.
    pub bias: Vector6<f64>,
    pub selection: Selection,
}

pub fn dynamics_terms(state: &GeneralizedState, p: &RobotParams) -> DynamicsTerms {
    DynamicsTerms {
        mass: mass_matrix(state, p),
        bias: bias_forces(state, p),
        selection: selection_matrix(),
    }
}

pub fn mass_matrix(state: &GeneralizedState, p: &RobotParams) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for s in segments(p) {
        let jv = s.com.jacobian(&state.q);
        let jw = s.angle.jacobian();
        m += jv.transpose() * jv * s.mass + jw.transpose() * jw * s.inertia;
    }
    m
}

/// Coriolis/centrifugal matrix `C(q, q̇)`.
pub fn coriolis_matrix(state: &GeneralizedState, p: &RobotParams) -> Matrix6<f64> {
    let mut c = Matrix6::zeros();
    for s in segments(p) {
        let jv = s.com.jacobian(&state.q);
        let jvd = s.com.jacobian_dot(&state.q, &state.qdot);
        c += jv.transpose() * jvd * s.mass;
    }
    c
}

/// Gravity vector `∂V/∂q`.
pub fn gravity_vector(state: &GeneralizedState, p: &RobotParams) -> Vector6<f64> {
    let mut g = Vector6::zeros();
    for s in segments(p) {
        let jv = s.com.jacobian(&state.q);
        g += jv.transpose() * Vector2::new(0.0, s.mass * p.gravity);
    }
    g
}

pub fn bias_forces(state: &GeneralizedState, p: &RobotParams) -> Vector6<f64> {
    let mut b = Vector6::zeros();
    for s in segments(p) {
        let jv = s.com.jacobian(&state.q);
        let acc = s.com.jdot_qdot(&state.q, &state.qdot) * s.mass
            + Vector2::new(0.0, s.mass * p.gravity);
        b += jv.transpose() * acc;
    }
    b
}

pub fn kinetic_energy(state: &GeneralizedState, p: &RobotParams) -> f64 {
    0.5 * state.qdot.dot(&(mass_matrix(state, p) * state.qdot))
}

pub fn potential_energy(state: &GeneralizedState, p: &RobotParams) -> f64 {
    segments(p)
        .iter()
        .map(|s| s.mass * p.gravity * s.com.position(&state.q).y)
        .sum()
}

/// Which external force contributions are active.
#[derive(Clone)]
pub struct ForceModel {
    pub aero: Arc<dyn AeroModel>,
    pub aero_enabled: bool,
    /// Whether wing and tail forces act while a foot is on the ground.
    pub aero_in_stance: bool,
    pub ankle_spring: bool,
    pub toe_spring: bool,
}

impl Default for ForceModel {
    fn default() -> Self {
        Self {
            aero: Arc::new(FlatPlate),
            aero_enabled: true,
            aero_in_stance: true,
            ankle_spring: true,
            toe_spring: true,
        }
    }
}

impl ForceModel {
    /// Gravity-only configuration: no aero, no springs.
    pub fn passive() -> Self {
        Self {
            aero_enabled: false,
            ankle_spring: false,
            toe_spring: false,
            ..Default::default()
        }
    }
}

impl std::fmt::Debug for ForceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForceModel")
            .field("aero", &self.aero.name())
            .field("aero_enabled", &self.aero_enabled)
            .field("aero_in_stance", &self.aero_in_stance)
            .field("ankle_spring", &self.ankle_spring)
            .field("toe_spring", &self.toe_spring)
            .finish()
    }
}

pub fn spring_potential(state: &GeneralizedState, p: &RobotParams, forces: &ForceModel) -> f64 {
    let mut v = 0.0;
    if forces.ankle_spring {
        v += 0.5 * p.ankle_spring * (state.q[4] - p.ankle_rest_angle).powi(2);
    }
    if forces.toe_spring {
        v += 0.5 * p.toe_spring * (state.q[5] - p.toe_rest_angle).powi(2);
    }
    v
}

/// Propeller and control-surface inputs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Actuation {
    /// Throttle in [0, 1].
    pub thrust_level: f64,
    /// Extra wing incidence from the ailerons (rad).
    pub wing_deflection: f64,
    /// Extra tail incidence from the elevator (rad).
    pub tail_deflection: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForces {
    /// Propeller force at the body CoM (N).
    pub propeller: Vector2<f64>,
    pub wing: Vector2<f64>,
    pub tail: Vector2<f64>,
    /// Ankle spring torque (N·m).
    pub ankle_torque: f64,
    /// Toe spring torque (N·m).
    pub toe_torque: f64,
    /// All of the above projected onto the generalized coordinates.
    pub generalized: Vector6<f64>,
}

pub fn external_forces(
    state: &GeneralizedState,
    u: &Actuation,
    p: &RobotParams,
    forces: &ForceModel,
    in_stance: bool,
) -> ExternalForces {
    let q = &state.q;
    let pitch = q[2];
    let mut f_ext = Vector6::zeros();

    let level = u.thrust_level.clamp(0.0, 1.0);
    let thrust_dir = pitch + p.thrust_angle_offset;
    let propeller = Vector2::new(thrust_dir.cos(), thrust_dir.sin()) * (level * p.max_thrust);
    if level > 0.0 {
        let jc = chain(BodyPoint::BodyCom, p).jacobian(q);
        f_ext += jc.transpose() * propeller;
    }

    let mut wing = Vector2::zeros();
    let mut tail = Vector2::zeros();
    if forces.aero_enabled && (forces.aero_in_stance || !in_stance) {
        let wc = chain(BodyPoint::WingCenter, p);
        let tc = chain(BodyPoint::TailCenter, p);
        wing = surface_force(
            forces.aero.as_ref(),
            p.air_density,
            p.wing_area,
            pitch + p.wing_angle_offset + u.wing_deflection,
            wc.velocity(q, &state.qdot),
        );
        tail = surface_force(
            forces.aero.as_ref(),
            p.air_density,
            p.tail_area,
            pitch + p.tail_angle_offset + u.tail_deflection,
            tc.velocity(q, &state.qdot),
        );
        f_ext += wc.jacobian(q).transpose() * wing + tc.jacobian(q).transpose() * tail;
    }

    let ankle_torque = if forces.ankle_spring {
        -p.ankle_spring * (q[4] - p.ankle_rest_angle)
    } else {
        0.0
    };
    let toe_torque = if forces.toe_spring {
        -p.toe_spring * (q[5] - p.toe_rest_angle)
    } else {
        0.0
    };
    f_ext[4] += ankle_torque;
    f_ext[5] += toe_torque;

    ExternalForces {
        propeller,
        wing,
        tail,
        ankle_torque,
        toe_torque,
        generalized: f_ext,
    }
}

/// Baumgarte feedback on constraint position and velocity error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baumgarte {
    pub omega: f64,
}

impl Baumgarte {
    pub fn off() -> Self {
        Self { omega: 0.0 }
    }
    pub fn damping(&self) -> f64 {
        2.0 * self.omega
    }
    pub fn stiffness(&self) -> f64 {
        self.omega * self.omega
    }
}

impl Default for Baumgarte {
    fn default() -> Self {
        Self { omega: 100.0 }
    }
}

/// Where the active contact points are pinned.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactAnchor {
    pub mode: ContactMode,
    /// Ground positions of the constraint points (same layout as `p_c`).
    pub points: DVector<f64>,
    /// Toe deflection held by the joint stop in toe-tip mode.
    pub toe_lock: f64,
}

impl ContactAnchor {
    /// Pins the contact points where they currently are.
    pub fn at(state: &GeneralizedState, p: &RobotParams, mode: ContactMode) -> Result<Self> {
        Ok(Self {
            mode,
            points: constraint_positions(state, p, mode)?,
            toe_lock: if mode == ContactMode::ToeTip {
                p.toe_deflection_max
            } else {
                state.q[5]
            },
        })
    }
}

/// Independent constraint rows actually enforced in stance.
///
/// The flat-toe point set pins two points of one rigid toe, so its 4×6
/// Jacobian has rank 3; it is reduced to an orthonormal row basis. In
/// toe-tip mode the toe joint sits on its deflection stop, which adds one
/// joint-limit row to the two tip rows.
#[derive(Debug, Clone)]
pub struct ActiveConstraints {
    pub mode: ContactMode,
    pub j: DMatrix<f64>,
    pub jdot_qdot: DVector<f64>,
    /// Position error of each enforced row (zero when no anchor is given).
    pub error: DVector<f64>,
    /// Maps enforced-row multipliers to contact-point forces.
    pub to_contact: DMatrix<f64>,
    /// Number of leading contact rows (the rest are joint-limit rows).
    pub contact_rows: usize,
}

/// Structural rank of the enforced constraint set in each stance mode.
pub const STANCE_CONSTRAINT_RANK: usize = 3;

pub fn active_constraints(
    state: &GeneralizedState,
    p: &RobotParams,
    mode: ContactMode,
    anchor: Option<&ContactAnchor>,
) -> Result<ActiveConstraints> {
    let cj = constraint_jacobian(state, p, mode)?;
    let pos_err = match anchor {
        Some(a) => constraint_positions(state, p, mode)? - &a.points,
        None => DVector::zeros(cj.j.nrows()),
    };
    match mode {
        ContactMode::FlatToe => {
            let basis = range_basis(&cj.j, 1e-9);
            if basis.ncols() != STANCE_CONSTRAINT_RANK {
                return Err(Error::ConstraintRankDeficient {
                    rank: basis.ncols(),
                    expected: STANCE_CONSTRAINT_RANK,
                });
            }
            // Columns of `basis` combine the four point rows into independent rows.
            let bt = basis.transpose();
            Ok(ActiveConstraints {
                mode,
                j: &bt * &cj.j,
                jdot_qdot: &bt * &cj.jdot_qdot,
                error: &bt * pos_err,
                to_contact: basis,
                contact_rows: STANCE_CONSTRAINT_RANK,
            })
        }
        ContactMode::ToeTip => {
            let mut j = DMatrix::zeros(3, 6);
            j.view_mut((0, 0), (2, 6)).copy_from(&cj.j);
            j[(2, 5)] = 1.0;
            let mut jdq = DVector::zeros(3);
            jdq.rows_mut(0, 2).copy_from(&cj.jdot_qdot);
            let mut err = DVector::zeros(3);
            err.rows_mut(0, 2).copy_from(&pos_err);
            if let Some(a) = anchor {
                err[2] = state.q[5] - a.toe_lock;
            }
            let to_contact = DMatrix::identity(2, 2);
            Ok(ActiveConstraints {
                mode,
                j,
                jdot_qdot: jdq,
                error: err,
                to_contact,
                contact_rows: 2,
            })
        }
        ContactMode::Airborne => Err(Error::NoActiveConstraints),
    }
}

/// Result of the stance solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceSolution {
    pub qddot: Vector6<f64>,
    /// Ground reaction on the robot at each contact point (2 entries per point).
    pub contact_force: DVector<f64>,
    /// Torque exerted by the toe deflection stop (toe-tip mode only).
    pub toe_stop_torque: f64,
    /// Multipliers of the enforced rows.
    pub multipliers: DVector<f64>,
}

impl StanceSolution {
    /// Net ground reaction force on the robot.
    pub fn net_force(&self) -> Vector2<f64> {
        net_contact_force(&self.contact_force)
    }
}

pub fn net_contact_force(f: &DVector<f64>) -> Vector2<f64> {
    let mut n = Vector2::zeros();
    for i in 0..f.len() / 2 {
        n += Vector2::new(f[2 * i], f[2 * i + 1]);
    }
    n
}

/// Generalized force from actuators and external loads.
pub fn applied_generalized(tau: &Vector2<f64>, ext: &ExternalForces) -> Vector6<f64> {
    selection_matrix().transpose() * tau + ext.generalized
}

/// Solves `[M −Jᵀ; J 0] [q̈; λ] = [Sᵀτ + f_ext − bias; −J̇q̇ − 2ω J q̇ − ω² e]`.
#[allow(clippy::too_many_arguments)]
pub fn constrained_accel(
    state: &GeneralizedState,
    tau: &Vector2<f64>,
    u: &Actuation,
    p: &RobotParams,
    forces: &ForceModel,
    mode: ContactMode,
    anchor: Option<&ContactAnchor>,
    baumgarte: Baumgarte,
) -> Result<StanceSolution> {
    let ext = external_forces(state, u, p, forces, true);
    let h = applied_generalized(tau, &ext) - bias_forces(state, p);
    let mass = mass_matrix(state, p);
    let ac = active_constraints(state, p, mode, anchor)?;
    solve_kkt(&mass, &h, &ac, &state.qdot, baumgarte)
}

pub fn solve_kkt(
    mass: &Matrix6<f64>,
    h: &Vector6<f64>,
    ac: &ActiveConstraints,
    qdot: &Vector6<f64>,
    baumgarte: Baumgarte,
) -> Result<StanceSolution> {
    let r = ac.j.nrows();
    let n = 6 + r;
    let mut k = DMatrix::zeros(n, n);
    k.view_mut((0, 0), (6, 6)).copy_from(mass);
    k.view_mut((0, 6), (6, r)).copy_from(&(-ac.j.transpose()));
    k.view_mut((6, 0), (r, 6)).copy_from(&ac.j);
    let vel_err = &ac.j * qdot;
    let rhs_c = -&ac.jdot_qdot - vel_err * baumgarte.damping() - &ac.error * baumgarte.stiffness();
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, 6).copy_from(h);
    rhs.rows_mut(6, r).copy_from(&rhs_c);

    let lu = k.clone().lu();
    let sol = match lu.solve(&rhs) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => {
            return Err(Error::ConstraintDegeneracy { condition: condition_number(&k) });
        }
    };
    // Guard against numerically singular but "solvable" systems.
    let resid = (&k * &sol - &rhs).norm();
    if resid > 1e-6 * (1.0 + rhs.norm()) {
        return Err(Error::ConstraintDegeneracy { condition: condition_number(&k) });
    }
    let qddot = Vector6::from_iterator(sol.rows(0, 6).iter().copied());
    let multipliers = sol.rows(6, r).into_owned();
    let contact_mult = multipliers.rows(0, ac.contact_rows).into_owned();
    let contact_force = &ac.to_contact * contact_mult;
    let toe_stop_torque = if r > ac.contact_rows { multipliers[r - 1] } else { 0.0 };
    Ok(StanceSolution { qddot, contact_force, toe_stop_torque, multipliers })
}

fn condition_number(k: &DMatrix<f64>) -> f64 {
    let sv = k.clone().svd(false, false).singular_values;
    let (mx, mn) = (sv.max(), sv.min());
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

/// Unconstrained flight dynamics.
pub fn flight_accel(
    state: &GeneralizedState,
    tau: &Vector2<f64>,
    u: &Actuation,
    p: &RobotParams,
    forces: &ForceModel,
) -> Result<Vector6<f64>> {
    let ext = external_forces(state, u, p, forces, false);
    let h = applied_generalized(tau, &ext) - bias_forces(state, p);
    let mass = mass_matrix(state, p);
    Ok(mass.cholesky().ok_or(Error::MassMatrixIndefinite)?.solve(&h))
}

/// Projects `q̇` onto the velocities admitted by `ac` (perfectly plastic impact).
pub fn project_velocity(
    state: &GeneralizedState,
    p: &RobotParams,
    ac: &ActiveConstraints,
) -> Result<Vector6<f64>> {
    let mass = mass_matrix(state, p);
    let chol = mass.cholesky().ok_or(Error::MassMatrixIndefinite)?;
    let jt = ac.j.transpose();
    let minv_jt = DMatrix::from_fn(6, ac.j.nrows(), |r, c| {
        let col = Vector6::from_iterator(jt.column(c).iter().copied());
        chol.solve(&col)[r]
    });
    let a = &ac.j * &minv_jt;
    let v = &ac.j * state.qdot;
    match a.lu().solve(&v) {
        Some(l) => Ok(state.qdot - Vector6::from_iterator((&minv_jt * l).iter().copied())),
        None => Err(Error::ConstraintDegeneracy { condition: f64::INFINITY }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{com_position, forward_kinematics};

    fn default_state() -> GeneralizedState {
        let p = RobotParams::default();
        GeneralizedState::standing(
            10f64.to_radians(),
            135f64.to_radians(),
            145f64.to_radians(),
            25f64.to_radians(),
            &p,
        )
    }

    #[test]
    fn degenerate_masses() {
        let p = RobotParams {
            m_upper: 0.0,
            m_lower: 0.0,
            m_palm: 0.0,
            m_toe: 0.0,
            ..Default::default()
        };
        let s = default_state();
        let m = mass_matrix(&s, &p);
        assert!((m[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((m[(1, 1)] - 0.5).abs() < 1e-15);
        // translation-pitch coupling only from the body CoM lever
        let k = forward_kinematics(&s, &p);
        let r = k.body_com - k.hip;
        assert!((m[(0, 2)] + 0.5 * r.y).abs() < 1e-15);
        assert!((m[(1, 2)] - 0.5 * r.x).abs() < 1e-15);
        for j in 3..6 {
            assert_eq!(m[(0, j)], 0.0);
            assert_eq!(m[(1, j)], 0.0);
        }
    }

    #[test]
    fn statics_bias_is_gravity() {
        let p = RobotParams::default();
        let s = default_state();
        let b = bias_forces(&s, &p);
        assert!((b[1] - p.total_mass() * 9.81).abs() < 1e-12);
        assert!((b - gravity_vector(&s, &p)).norm() < 1e-15);
    }

    #[test]
    fn rest_case_has_no_external_force() {
        let p = RobotParams { ankle_rest_angle: 145f64.to_radians(), ..Default::default() };
        let s = default_state();
        let ext = external_forces(&s, &Actuation::default(), &p, &ForceModel::default(), true);
        assert_eq!(ext.generalized, Vector6::zeros());
    }

    #[test]
    fn full_thrust_magnitude_and_direction() {
        let p = RobotParams::default();
        let mut s = default_state();
        s.q[2] = 0.0;
        let u = Actuation { thrust_level: 1.0, ..Default::default() };
        let ext = external_forces(&s, &u, &p, &ForceModel::passive(), true);
        assert!((ext.propeller.norm() - 0.63 * 9.81).abs() < 1e-12);
        assert!((ext.propeller.y.atan2(ext.propeller.x).to_degrees() - 7.0).abs() < 1e-12);
        // a force through the body CoM: the linear rows carry it unchanged
        assert!((ext.generalized[0] - ext.propeller.x).abs() < 1e-12);
        assert!((ext.generalized[1] - ext.propeller.y).abs() < 1e-12);
    }

    #[test]
    fn spring_torques_only_in_joint_rows() {
        let p = RobotParams::default();
        let mut s = default_state();
        s.q[4] += 0.2;
        s.q[5] -= 0.1;
        let forces = ForceModel { aero_enabled: false, ..Default::default() };
        let ext = external_forces(&s, &Actuation::default(), &p, &forces, true);
        for i in 0..4 {
            assert_eq!(ext.generalized[i], 0.0);
        }
        assert_eq!(ext.generalized[4], ext.ankle_torque);
        assert_eq!(ext.generalized[5], ext.toe_torque);
        assert!((ext.toe_torque - 0.1 * p.toe_spring).abs() < 1e-12);
    }

    #[test]
    fn flat_toe_rank_is_three() {
        let p = RobotParams::default();
        let ac = active_constraints(&default_state(), &p, ContactMode::FlatToe, None).unwrap();
        assert_eq!(ac.j.nrows(), 3);
        let ac = active_constraints(&default_state(), &p, ContactMode::ToeTip, None).unwrap();
        assert_eq!(ac.j.nrows(), 3);
    }

    #[test]
    fn kkt_block_residuals() {
        let p = RobotParams::default();
        let mut s = default_state();
        s.qdot = Vector6::new(0.1, -0.2, 0.3, 1.0, -2.0, 0.5);
        let tau = Vector2::new(0.3, -0.4);
        for mode in [ContactMode::FlatToe, ContactMode::ToeTip] {
            // admissible velocity, otherwise the redundant flat-toe row has a centripetal residue
            let ac0 = active_constraints(&s, &p, mode, None).unwrap();
            s.qdot = project_velocity(&s, &p, &ac0).unwrap();
            let sol = constrained_accel(
                &s,
                &tau,
                &Actuation { thrust_level: 0.5, ..Default::default() },
                &p,
                &ForceModel::default(),
                mode,
                None,
                Baumgarte::off(),
            )
            .unwrap();
            let ac = active_constraints(&s, &p, mode, None).unwrap();
            let c = &ac.j * DVector::from_column_slice(sol.qddot.as_slice()) + &ac.jdot_qdot;
            assert!(c.norm() < 1e-10, "{mode}: {}", c.norm());
            let ext = external_forces(
                &s,
                &Actuation { thrust_level: 0.5, ..Default::default() },
                &p,
                &ForceModel::default(),
                true,
            );
            let lhs = mass_matrix(&s, &p) * sol.qddot + bias_forces(&s, &p);
            let jt_l = ac.j.transpose() * &sol.multipliers;
            let rhs = applied_generalized(&tau, &ext)
                + Vector6::from_iterator(jt_l.iter().copied());
            assert!((lhs - rhs).norm() < 1e-10);
            // full constraint set is also satisfied at acceleration level
            let cj = constraint_jacobian(&s, &p, mode).unwrap();
            let full = &cj.j * DVector::from_column_slice(sol.qddot.as_slice()) + &cj.jdot_qdot;
            assert!(full.norm() < 1e-10);
        }
    }

    #[test]
    fn flight_free_fall_com() {
        let p = RobotParams::default();
        let s = default_state();
        let qdd = flight_accel(&s, &Vector2::zeros(), &Actuation::default(), &p, &ForceModel::passive()).unwrap();
        let (j, jdq) = crate::model::com_jacobian(&s, &p);
        let a = j * qdd + jdq;
        assert!((a - Vector2::new(0.0, -9.81)).norm() < 1e-10);
        let _ = com_position(&s, &p);
    }
}
