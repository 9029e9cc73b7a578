//! Screw drivetrain torque and efficiency from the measured force curve.

use serde::{Deserialize, Serialize};

use super::gait::MAX_SCREW_SPEED_RAD_S;
use crate::error::{Error, FieldError, Result};

/// Measured peak tangential force at the low end of the speed sweep.
pub const MEASURED_FORCE_LOW: (f64, f64) = (10.0, 40.0);
/// Measured peak tangential force at the high end of the speed sweep.
pub const MEASURED_FORCE_HIGH: (f64, f64) = (50.0, 75.9);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivetrainSpec {
    /// No-load maximum motor torque.
    pub motor_max_torque_nm: f64,
    pub gear_ratio: f64,
    /// Lever arm that maps the measured tangential force onto shell torque.
    /// 3.60 N·m / 40.0 N and 6.83 N·m / 75.9 N both give 0.09 m.
    pub effective_screw_radius_m: f64,
    pub ujoint_internal_ratio: f64,
    pub ujoint_external_ratio: f64,
    pub screw_continuous_torque_nm: f64,
    pub screw_peak_torque_nm: f64,
}

impl Default for DrivetrainSpec {
    fn default() -> Self {
        Self {
            motor_max_torque_nm: 1.5,
            gear_ratio: 7.0,
            effective_screw_radius_m: 0.09,
            ujoint_internal_ratio: 5.0,
            ujoint_external_ratio: 1.8,
            screw_continuous_torque_nm: 1.0,
            screw_peak_torque_nm: 3.8,
        }
    }
}

impl DrivetrainSpec {
    /// Shell torque with a lossless gear train.
    pub fn ideal_shell_torque_nm(&self, motor_torque_nm: f64) -> f64 {
        motor_torque_nm * self.gear_ratio
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let fields = [
            ("drivetrain.motor_max_torque", self.motor_max_torque_nm),
            ("drivetrain.gear_ratio", self.gear_ratio),
            ("drivetrain.effective_screw_radius", self.effective_screw_radius_m),
            ("drivetrain.ujoint_internal_ratio", self.ujoint_internal_ratio),
            ("drivetrain.ujoint_external_ratio", self.ujoint_external_ratio),
            ("drivetrain.screw_continuous_torque", self.screw_continuous_torque_nm),
            ("drivetrain.screw_peak_torque", self.screw_peak_torque_nm),
        ];
        fields
            .into_iter()
            .filter(|(_, v)| !(*v > 0.0))
            .map(|(f, _)| FieldError::new(f, "must be positive"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScrewOutput {
    pub shell_torque_nm: f64,
    pub tangential_force_n: f64,
    /// Shell torque over the ideal `motor_torque × gear_ratio`.
    pub efficiency: f64,
    /// Speed lies below the measured 10–50 rad/s range.
    pub extrapolated: bool,
}

fn measured_peak_force(speed_rad_s: f64) -> f64 {
    let (s0, f0) = MEASURED_FORCE_LOW;
    let (s1, f1) = MEASURED_FORCE_HIGH;
    f0 + (f1 - f0) * (speed_rad_s - s0) / (s1 - s0)
}

/// Peak output at the screw shell for a commanded speed.
pub fn screw_output(motor_torque_nm: f64, speed_rad_s: f64, drivetrain: &DrivetrainSpec) -> Result<ScrewOutput> {
    if !(0.0..=MAX_SCREW_SPEED_RAD_S).contains(&speed_rad_s) {
        return Err(Error::arg(
            "speed",
            format!("{speed_rad_s} rad/s outside 0..={MAX_SCREW_SPEED_RAD_S} rad/s"),
        ));
    }
    if !(motor_torque_nm >= 0.0) {
        return Err(Error::arg("motor_torque", "must be non-negative"));
    }
    let curve_force = measured_peak_force(speed_rad_s);
    let ideal = drivetrain.ideal_shell_torque_nm(motor_torque_nm);
    let shell_torque_nm = (curve_force * drivetrain.effective_screw_radius_m).min(ideal);
    let tangential_force_n = shell_torque_nm / drivetrain.effective_screw_radius_m;
    let efficiency = if ideal > 0.0 { shell_torque_nm / ideal } else { 0.0 };
    Ok(ScrewOutput {
        shell_torque_nm,
        tangential_force_n,
        efficiency,
        extrapolated: speed_rad_s < MEASURED_FORCE_LOW.0,
    })
}
