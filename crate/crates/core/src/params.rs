//! Physical constants of the planar robot model.
//!
//! Defaults reproduce the simulation parameter table used for the jumping
//! take-off study. Angles are stored in radians and spring constants in
//! N·m/rad; the config loader converts from degrees and N·mm/° on input.

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

/// Converts a spring constant given in N·mm/° to N·m/rad.
pub fn nmm_per_deg_to_nm_per_rad(k: f64) -> f64 {
    k * 1e-3 * 180.0 / std::f64::consts::PI
}

/// Converts a thrust given in kilogram-force to newtons.
pub fn kgf_to_newton(kgf: f64) -> f64 {
    kgf * GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotParams {
    /// Upper limb length (m).
    pub l1: f64,
    /// Lower limb length (m).
    pub l2: f64,
    /// Toe-joint offset length from the lower-limb end (m).
    pub l3: f64,
    /// Toe-joint offset angle relative to the lower limb (rad).
    pub theta3: f64,
    /// Toe length (m).
    pub l4: f64,

    pub m_body: f64,
    pub m_upper: f64,
    pub m_lower: f64,
    pub m_palm: f64,
    pub m_toe: f64,

    /// Body length used for the slender-rod pitch inertia (m).
    pub body_length: f64,
    /// Body centre of mass relative to the hip, body frame (m).
    pub body_com_offset: Vector2<f64>,

    pub air_density: f64,
    pub wing_area: f64,
    pub tail_area: f64,
    pub wing_angle_offset: f64,
    pub tail_angle_offset: f64,
    pub thrust_angle_offset: f64,
    /// Maximum propeller thrust (N).
    pub max_thrust: f64,

    /// Ankle torsion spring (N·m/rad).
    pub ankle_spring: f64,
    /// Toe torsion spring (N·m/rad).
    pub toe_spring: f64,
    pub ankle_rest_angle: f64,
    pub toe_rest_angle: f64,

    /// Wing aerodynamic centre, body frame relative to the hip (m).
    pub wing_center: Vector2<f64>,
    /// Tail aerodynamic centre, body frame relative to the hip (m).
    pub tail_center: Vector2<f64>,

    pub gear_ratio: f64,
    /// Motor no-load speed (rad/s).
    pub motor_max_speed: f64,
    /// Peak torque available at the motor shaft of one lumped joint (N·m).
    pub motor_max_torque: f64,
    /// Toe deflection at which the toe joint saturates (rad).
    pub toe_deflection_max: f64,
    pub gravity: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            l1: 0.12,
            l2: 0.12,
            l3: 0.023,
            theta3: 45.0 * deg,
            l4: 0.06,
            m_body: 0.5,
            m_upper: 0.015,
            m_lower: 0.015,
            m_palm: 0.015,
            m_toe: 0.005,
            body_length: 0.5,
            body_com_offset: Vector2::new(-0.03, 0.0),
            air_density: 1.225,
            wing_area: 0.18,
            tail_area: 0.0864,
            wing_angle_offset: 7.0 * deg,
            tail_angle_offset: 1.0 * deg,
            thrust_angle_offset: 7.0 * deg,
            max_thrust: kgf_to_newton(0.63),
            ankle_spring: nmm_per_deg_to_nm_per_rad(3.207),
            toe_spring: nmm_per_deg_to_nm_per_rad(6.249),
            ankle_rest_angle: 0.0,
            toe_rest_angle: 25.0 * deg,
            wing_center: Vector2::new(-0.02, 0.042),
            tail_center: Vector2::new(-0.28, 0.074),
            gear_ratio: 19.13,
            motor_max_speed: 99_900.0 * deg,
            motor_max_torque: 0.12,
            toe_deflection_max: 25.0 * deg,
            gravity: GRAVITY,
        }
    }
}

impl RobotParams {
    pub fn total_mass(&self) -> f64 {
        self.m_body + self.m_upper + self.m_lower + self.m_palm + self.m_toe
    }

    /// Joint torque limit after the gearbox (N·m).
    pub fn joint_torque_limit(&self) -> f64 {
        self.gear_ratio * self.motor_max_torque
    }

    /// Maximum joint speed the gearbox output can reach (rad/s).
    pub fn joint_speed_limit(&self) -> f64 {
        self.motor_max_speed / self.gear_ratio
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("m_body", self.m_body),
            ("body_length", self.body_length),
            ("air_density", self.air_density),
            ("wing_area", self.wing_area),
            ("tail_area", self.tail_area),
            ("gear_ratio", self.gear_ratio),
            ("motor_max_speed", self.motor_max_speed),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("m_upper", self.m_upper),
            ("m_lower", self.m_lower),
            ("m_palm", self.m_palm),
            ("m_toe", self.m_toe),
            ("ankle_spring", self.ankle_spring),
            ("toe_spring", self.toe_spring),
            ("max_thrust", self.max_thrust),
            ("motor_max_torque", self.motor_max_torque),
            ("toe_deflection_max", self.toe_deflection_max),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}
