//! Design-verification models and a deterministic simulator for a
//! segmented, screw-propelled amphibious snake robot.
//!
//! All quantities are SI internally. Unit-suffixed strings are converted in
//! [`units`] and [`config`] only. Pressures are gauge.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod comms;
pub mod config;
pub mod error;
pub mod hydrostatics;
pub mod kinematics;
pub mod model;
pub mod pneumatics;
pub mod power;
pub mod sim;
pub mod units;
pub mod vertical;

pub use error::{Error, FieldError, Result};
