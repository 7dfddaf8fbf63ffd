//! Quasi-steady aerodynamic coefficient models for the wing and tail.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector2;

use crate::registry::Registry;

/// Lift and drag coefficients as a function of angle of attack.
pub trait AeroModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns `(C_L, C_D)` for an angle of attack in radians, wrapped to (-π, π].
    fn coefficients(&self, alpha: f64) -> (f64, f64);
}

/// Flat plate: `C_L = 2 sin α cos α`, `C_D = 2 sin² α`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatPlate;

impl AeroModel for FlatPlate {
    fn name(&self) -> &'static str {
        "flat_plate"
    }

    fn coefficients(&self, alpha: f64) -> (f64, f64) {
        let (s, c) = alpha.sin_cos();
        (2.0 * s * c, 2.0 * s * s)
    }
}

/// Thin-airfoil lift slope up to stall, blending linearly into the flat plate
/// over `blend` radians past the stall angle.
#[derive(Debug, Clone, Copy)]
pub struct ThinAirfoilWithStall {
    pub stall_angle: f64,
    pub blend: f64,
    pub cd0: f64,
    pub induced_factor: f64,
}

impl Default for ThinAirfoilWithStall {
    fn default() -> Self {
        Self {
            stall_angle: 12f64.to_radians(),
            blend: 8f64.to_radians(),
            cd0: 0.02,
            induced_factor: 0.08,
        }
    }
}

impl AeroModel for ThinAirfoilWithStall {
    fn name(&self) -> &'static str {
        "thin_airfoil_with_stall"
    }

    fn coefficients(&self, alpha: f64) -> (f64, f64) {
        let a = alpha.abs();
        let attached = |x: f64| {
            let cl = 2.0 * PI * x;
            (cl, self.cd0 + self.induced_factor * cl * cl)
        };
        let (cl, cd) = if a <= self.stall_angle {
            attached(alpha)
        } else {
            let (plate_cl, plate_cd) = FlatPlate.coefficients(alpha);
            let w = ((a - self.stall_angle) / self.blend).min(1.0);
            let (att_cl, att_cd) = attached(self.stall_angle * alpha.signum());
            (
                (1.0 - w) * att_cl + w * plate_cl,
                (1.0 - w) * att_cd + w * plate_cd,
            )
        };
        (cl, cd)
    }
}

/// Disables aerodynamic forces.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAero;

impl AeroModel for NoAero {
    fn name(&self) -> &'static str {
        "none"
    }

    fn coefficients(&self, _alpha: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

pub fn aero_models() -> Registry<dyn AeroModel> {
    let mut r: Registry<dyn AeroModel> = Registry::new("aero model");
    r.register("flat_plate", || Arc::new(FlatPlate));
    r.register("thin_airfoil_with_stall", || Arc::new(ThinAirfoilWithStall::default()));
    r.register("none", || Arc::new(NoAero));
    r
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Aerodynamic force on a surface moving with world velocity `velocity`.
///
/// `incidence` is the surface chord angle in the world frame (pitch plus the
/// surface offset). Still air is assumed, so the relative airflow is `-velocity`.
pub fn surface_force(
    model: &dyn AeroModel,
    air_density: f64,
    area: f64,
    incidence: f64,
    velocity: Vector2<f64>,
) -> Vector2<f64> {
    let speed = velocity.norm();
    if speed < 1e-12 {
        return Vector2::zeros();
    }
    let dir = velocity / speed;
    let path_angle = velocity.y.atan2(velocity.x);
    let alpha = wrap_angle(incidence - path_angle);
    let (cl, cd) = model.coefficients(alpha);
    let dynamic_pressure = 0.5 * air_density * speed * speed;
    let lift_dir = Vector2::new(-dir.y, dir.x);
    (lift_dir * cl - dir * cd) * (dynamic_pressure * area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plate_values() {
        let (cl, cd) = FlatPlate.coefficients(PI / 4.0);
        assert!((cl - 1.0).abs() < 1e-15);
        assert!((cd - 1.0).abs() < 1e-15);
        assert_eq!(FlatPlate.coefficients(0.0), (0.0, 0.0));
    }

    #[test]
    fn thin_airfoil_continuous_at_stall() {
        let m = ThinAirfoilWithStall::default();
        let a = m.stall_angle;
        let below = m.coefficients(a - 1e-9);
        let above = m.coefficients(a + 1e-9);
        assert!((below.0 - above.0).abs() < 1e-6);
        let deep = m.coefficients(60f64.to_radians());
        let plate = FlatPlate.coefficients(60f64.to_radians());
        assert!((deep.0 - plate.0).abs() < 1e-12);
    }

    #[test]
    fn level_flight_lift_is_up() {
        let f = surface_force(&FlatPlate, 1.225, 0.18, 7f64.to_radians(), Vector2::new(3.0, 0.0));
        assert!(f.y > 0.0);
        assert!(f.x < 0.0);
    }

    #[test]
    fn registry_has_builtins() {
        let r = aero_models();
        for n in ["flat_plate", "thin_airfoil_with_stall", "none"] {
            assert_eq!(r.create(n).unwrap().name(), n);
        }
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
