//! Gait generators. Each is a pure function of its parameters and time.
//!
//! Screwing turns the chain into an arc: with every yaw joint at the same
//! angle θ the segments form a regular polygon whose inscribed circle has
//! radius `l / (2·tan(θ/2))`. This is the turning radius we command.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::chain::JointAngles;
use super::drivetrain::DrivetrainSpec;
use crate::error::{Error, Result};
use crate::model::JointSpec;

/// Upper end of the screw speeds the drivetrain was characterized over.
pub const MAX_SCREW_SPEED_RAD_S: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitCommand {
    pub t_s: f64,
    pub joints: Vec<JointAngles>,
    pub screw_speeds_rad_s: Vec<f64>,
}

impl GaitCommand {
    pub fn idle(t_s: f64, segments: usize) -> Self {
        Self {
            t_s,
            joints: vec![JointAngles::default(); segments.saturating_sub(1)],
            screw_speeds_rad_s: vec![0.0; segments],
        }
    }
}

fn check_screw_speed(speed: f64) -> Result<()> {
    if !(0.0..=MAX_SCREW_SPEED_RAD_S).contains(&speed) {
        return Err(Error::arg(
            "screw_speed",
            format!("{speed} rad/s outside 0..={MAX_SCREW_SPEED_RAD_S} rad/s"),
        ));
    }
    Ok(())
}

pub fn radius_for_angle(theta_rad: f64, segment_length_m: f64) -> f64 {
    segment_length_m / (2.0 * (theta_rad / 2.0).tan())
}

/// Inverse of [`radius_for_angle`]. An infinite radius is a straight line.
pub fn angle_for_radius(radius_m: f64, segment_length_m: f64) -> f64 {
    if radius_m.is_infinite() {
        return 0.0;
    }
    2.0 * (segment_length_m / (2.0 * radius_m)).atan()
}

pub fn min_turn_radius(yaw_limit_rad: f64, segment_length_m: f64) -> f64 {
    radius_for_angle(yaw_limit_rad, segment_length_m)
}

/// Sets every yaw joint to the arc angle for `turn_radius_m`. Negative radii
/// turn the other way.
pub fn gait_screwing(
    turn_radius_m: f64,
    screw_speed_rad_s: f64,
    segments: usize,
    joints: &JointSpec,
    t_s: f64,
) -> Result<GaitCommand> {
    check_screw_speed(screw_speed_rad_s)?;
    let l = joints.segment_length_m;
    let min_radius = min_turn_radius(joints.yaw_limit_rad, l);
    if turn_radius_m.is_nan() || turn_radius_m.abs() < min_radius * (1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "turn radius {turn_radius_m} m is tighter than {min_radius:.4} m allowed by the {:.1} deg yaw limit",
            joints.yaw_limit_rad.to_degrees()
        )));
    }
    let theta = angle_for_radius(turn_radius_m, l).clamp(-joints.yaw_limit_rad, joints.yaw_limit_rad);
    Ok(GaitCommand {
        t_s,
        joints: vec![JointAngles::new(0.0, theta); segments.saturating_sub(1)],
        screw_speeds_rad_s: vec![screw_speed_rad_s; segments],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidewindingParams {
    pub amplitude_pitch_rad: f64,
    pub amplitude_yaw_rad: f64,
    pub frequency_hz: f64,
    pub phase_lag_rad: f64,
    #[serde(default)]
    pub screw_speed_rad_s: f64,
}

/// Travelling pitch and yaw waves with yaw leading pitch by a quarter period.
pub fn gait_sidewinding(
    params: &SidewindingParams,
    t_s: f64,
    segments: usize,
    joints: &JointSpec,
) -> Result<GaitCommand> {
    if params.amplitude_pitch_rad.abs() > joints.pitch_limit_rad {
        return Err(Error::arg(
            "amplitude_pitch",
            format!(
                "{:.2} deg exceeds the {:.2} deg pitch limit",
                params.amplitude_pitch_rad.to_degrees(),
                joints.pitch_limit_rad.to_degrees()
            ),
        ));
    }
    if params.amplitude_yaw_rad.abs() > joints.yaw_limit_rad {
        return Err(Error::arg(
            "amplitude_yaw",
            format!(
                "{:.2} deg exceeds the {:.2} deg yaw limit",
                params.amplitude_yaw_rad.to_degrees(),
                joints.yaw_limit_rad.to_degrees()
            ),
        ));
    }
    if !(params.frequency_hz >= 0.0) {
        return Err(Error::arg("frequency", "must be non-negative"));
    }
    check_screw_speed(params.screw_speed_rad_s)?;
    let omega_t = 2.0 * PI * params.frequency_hz * t_s;
    let joints = (0..segments.saturating_sub(1))
        .map(|i| {
            let phase = omega_t + i as f64 * params.phase_lag_rad;
            JointAngles::new(
                params.amplitude_pitch_rad * phase.sin(),
                params.amplitude_yaw_rad * (phase + FRAC_PI_2).sin(),
            )
        })
        .collect();
    Ok(GaitCommand {
        t_s,
        joints,
        screw_speeds_rad_s: vec![params.screw_speed_rad_s; segments],
    })
}

/// Straight chain rolling on its screws like wheels.
pub fn gait_wheeling(
    ground_speed_m_s: f64,
    slip: f64,
    drivetrain: &DrivetrainSpec,
    segments: usize,
    t_s: f64,
) -> Result<GaitCommand> {
    if !(0.0..1.0).contains(&slip) {
        return Err(Error::arg("slip", "must be in [0, 1)"));
    }
    if !(ground_speed_m_s >= 0.0) {
        return Err(Error::arg("ground_speed", "must be non-negative"));
    }
    let speed = ground_speed_m_s / (drivetrain.effective_screw_radius_m * (1.0 - slip));
    if speed > MAX_SCREW_SPEED_RAD_S {
        return Err(Error::Infeasible(format!(
            "{ground_speed_m_s} m/s needs {speed:.1} rad/s, above {MAX_SCREW_SPEED_RAD_S} rad/s"
        )));
    }
    Ok(GaitCommand {
        t_s,
        joints: vec![JointAngles::default(); segments.saturating_sub(1)],
        screw_speeds_rad_s: vec![speed; segments],
    })
}

/// Gait selection as it appears on the wire and in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GaitMode {
    #[default]
    Idle,
    Screwing {
        /// Omitted means straight ahead.
        #[serde(default)]
        turn_radius_m: Option<f64>,
        screw_speed_rad_s: f64,
    },
    Wheeling {
        ground_speed_m_s: f64,
        #[serde(default)]
        slip: f64,
    },
    Sidewinding(SidewindingParams),
}

impl GaitMode {
    pub fn name(&self) -> &'static str {
        match self {
            GaitMode::Idle => "idle",
            GaitMode::Screwing { .. } => "screwing",
            GaitMode::Wheeling { .. } => "wheeling",
            GaitMode::Sidewinding(_) => "sidewinding",
        }
    }

    pub fn command(
        &self,
        t_s: f64,
        segments: usize,
        joints: &JointSpec,
        drivetrain: &DrivetrainSpec,
    ) -> Result<GaitCommand> {
        match self {
            GaitMode::Idle => Ok(GaitCommand::idle(t_s, segments)),
            GaitMode::Screwing {
                turn_radius_m,
                screw_speed_rad_s,
            } => gait_screwing(
                turn_radius_m.unwrap_or(f64::INFINITY),
                *screw_speed_rad_s,
                segments,
                joints,
                t_s,
            ),
            GaitMode::Wheeling { ground_speed_m_s, slip } => {
                gait_wheeling(*ground_speed_m_s, *slip, drivetrain, segments, t_s)
            }
            GaitMode::Sidewinding(p) => gait_sidewinding(p, t_s, segments, joints),
        }
    }
}
