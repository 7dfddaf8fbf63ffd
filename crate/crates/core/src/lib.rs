//! Planar hybrid dynamics, prioritized task-space control, gait generation and
//! locomotion energetics for a bird-inspired legged winged robot.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aero;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod gaits;
pub mod integrate;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod params;
pub mod registry;
pub mod sim;

pub use error::{Error, Result};
