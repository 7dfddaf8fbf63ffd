#![allow(dead_code)]

use nalgebra::Vector6;
use proptest::prelude::*;
use wingleg_core::model::GeneralizedState;

pub fn deg(v: f64) -> f64 {
    v.to_radians()
}

/// Configurations spread around the crouched posture.
pub fn any_q() -> impl Strategy<Value = Vector6<f64>> {
    (
        -0.5..0.5f64,
        -0.5..0.5f64,
        deg(-40.0)..deg(40.0),
        deg(60.0)..deg(170.0),
        deg(20.0)..deg(160.0),
        deg(0.0)..deg(40.0),
    )
        .prop_map(|(a, b, c, d, e, f)| Vector6::new(a, b, c, d, e, f))
}

pub fn any_qdot() -> impl Strategy<Value = Vector6<f64>> {
    prop::array::uniform6(-10.0..10.0f64).prop_map(Vector6::from)
}

pub fn any_state() -> impl Strategy<Value = GeneralizedState> {
    (any_q(), any_qdot()).prop_map(|(q, qd)| GeneralizedState::new(q, qd))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
