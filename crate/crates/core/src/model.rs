//! Shared domain types for one robot build.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::comms::BusTopology;
use crate::error::{Error, FieldError, Result};
use crate::hydrostatics::torus_volume;
use crate::kinematics::{DrivetrainSpec, HysteresisModel};
use crate::pneumatics::PneumaticNetwork;
use crate::units::{PA_PER_BAR, PA_PER_PSI};
use crate::vertical::HydroParams;

pub const DEFAULT_FLUID_DENSITY: f64 = 1000.0;
pub const DEFAULT_GRAVITY: f64 = 9.81;
pub const DEFAULT_SEGMENT_LENGTH_M: f64 = 0.441;
pub const DEFAULT_SYSTEM_MAX_LENGTH_M: f64 = 1.827;
pub const DEFAULT_SYSTEM_MAX_DIAMETER_M: f64 = 0.252;
pub const DEFAULT_SEGMENT_POWER_W: f64 = 240.0;
pub const DEFAULT_SYSTEM_POWER_W: f64 = 960.0;
pub const DEFAULT_INTERNAL_PRESSURE_PA: f64 = 6.0 * PA_PER_PSI;
pub const DEFAULT_SETTLE_PRESSURE_PA: f64 = 0.15 * PA_PER_BAR;
/// Upper edge of the bladder operating band (5 psig).
pub const MAX_SAFE_SETTLE_PRESSURE_PA: f64 = 5.0 * PA_PER_PSI;
pub const MAX_BLADDERS_PER_SEGMENT: u8 = 2;

/// Which pneumatic line feeds a segment's bladders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Front,
    Rear,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Front, Branch::Rear];

    pub fn index(self) -> usize {
        match self {
            Branch::Front => 0,
            Branch::Rear => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Front => "front",
            Branch::Rear => "rear",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "front" => Ok(Branch::Front),
            "rear" | "back" => Ok(Branch::Rear),
            other => Err(Error::arg("branch", format!("unknown branch '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSpec {
    pub name: String,
    pub mass_kg: f64,
    pub displaced_volume_m3: f64,
    pub foam_filled: bool,
    /// Net force printed alongside the measured mass and volume, if any.
    pub reported_net_force_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSpec {
    pub name: String,
    pub mass_kg: f64,
    /// Sinking weight added on top of the segment's own mass.
    pub ballast_kg: f64,
    pub displaced_volume_m3: f64,
    pub shells: Vec<ShellSpec>,
    pub bladder_slots: u8,
    pub branch: Branch,
    pub reported_net_force_n: Option<f64>,
}

impl SegmentSpec {
    pub fn total_mass_kg(&self) -> f64 {
        self.mass_kg + self.ballast_kg
    }
}

/// A torus-shaped swim bladder. Diameters, not radii: `minor` is the tube
/// diameter and `major` the diameter of the tube's centerline circle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BladderSpec {
    minor_diameter_m: f64,
    major_diameter_m: f64,
    empty_mass_kg: f64,
    settle_pressure_gauge_pa: f64,
    full_volume_m3: f64,
    reported_net_force_n: Option<f64>,
}

impl BladderSpec {
    pub fn new(
        minor_diameter_m: f64,
        major_diameter_m: f64,
        empty_mass_kg: f64,
        settle_pressure_gauge_pa: f64,
    ) -> Result<Self> {
        let mut errors = Vec::new();
        if !(minor_diameter_m > 0.0) {
            errors.push(FieldError::new("bladder.minor_diameter", "must be positive"));
        }
        if !(minor_diameter_m < major_diameter_m) {
            errors.push(FieldError::new(
                "bladder.minor_diameter",
                "must be smaller than the major diameter",
            ));
        }
        if !(empty_mass_kg >= 0.0) {
            errors.push(FieldError::new("bladder.empty_mass", "must be non-negative"));
        }
        if !(0.0..=MAX_SAFE_SETTLE_PRESSURE_PA).contains(&settle_pressure_gauge_pa)
        {
            errors.push(FieldError::new(
                "bladder.settle_pressure",
                format!(
                    "{settle_pressure_gauge_pa} Pa is outside the safe band 0..={MAX_SAFE_SETTLE_PRESSURE_PA:.0} Pa gauge"
                ),
            ));
        }
        if !errors.is_empty() {
            return Err(Error::Invalid(errors));
        }
        let full_volume_m3 = torus_volume(minor_diameter_m, major_diameter_m)?;
        Ok(Self {
            minor_diameter_m,
            major_diameter_m,
            empty_mass_kg,
            settle_pressure_gauge_pa,
            full_volume_m3,
            reported_net_force_n: None,
        })
    }

    pub fn with_reported_net_force(mut self, force_n: Option<f64>) -> Self {
        self.reported_net_force_n = force_n;
        self
    }

    pub fn minor_diameter_m(&self) -> f64 {
        self.minor_diameter_m
    }

    pub fn major_diameter_m(&self) -> f64 {
        self.major_diameter_m
    }

    pub fn empty_mass_kg(&self) -> f64 {
        self.empty_mass_kg
    }

    pub fn settle_pressure_gauge_pa(&self) -> f64 {
        self.settle_pressure_gauge_pa
    }

    pub fn full_volume_m3(&self) -> f64 {
        self.full_volume_m3
    }

    pub fn reported_net_force_n(&self) -> Option<f64> {
        self.reported_net_force_n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointSpec {
    pub pitch_limit_rad: f64,
    pub yaw_limit_rad: f64,
    pub segment_length_m: f64,
    /// Stored limits only; not derived from the motor and reductions.
    pub continuous_torque_nm: f64,
    pub peak_torque_nm: f64,
}

impl Default for JointSpec {
    fn default() -> Self {
        Self {
            pitch_limit_rad: FRAC_PI_2,
            yaw_limit_rad: FRAC_PI_2,
            segment_length_m: DEFAULT_SEGMENT_LENGTH_M,
            continuous_torque_nm: 2.6,
            peak_torque_nm: 13.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Environment {
    pub fluid_density_kg_m3: f64,
    pub gravity_m_s2: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            fluid_density_kg_m3: DEFAULT_FLUID_DENSITY,
            gravity_m_s2: DEFAULT_GRAVITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLimits {
    pub segment_max_w: f64,
    pub system_max_w: f64,
}

impl Default for PowerLimits {
    fn default() -> Self {
        Self {
            segment_max_w: DEFAULT_SEGMENT_POWER_W,
            system_max_w: DEFAULT_SYSTEM_POWER_W,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dimensions {
    pub system_max_length_m: f64,
    pub system_max_diameter_m: f64,
}

impl Default for Dimensions {
    fn default() -> Self {
        Self {
            system_max_length_m: DEFAULT_SYSTEM_MAX_LENGTH_M,
            system_max_diameter_m: DEFAULT_SYSTEM_MAX_DIAMETER_M,
        }
    }
}

/// A fully validated robot build, head first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotAssembly {
    pub name: String,
    pub segments: Vec<SegmentSpec>,
    pub bladder: BladderSpec,
    pub joints: JointSpec,
    pub drivetrain: DrivetrainSpec,
    pub hysteresis: HysteresisModel,
    pub pneumatics: PneumaticNetwork,
    pub hydro: HydroParams,
    pub bus: BusTopology,
    pub environment: Environment,
    pub power: PowerLimits,
    pub dimensions: Dimensions,
    pub internal_pressure_gauge_pa: f64,
    /// Non-fatal findings from validation, in document order.
    pub warnings: Vec<String>,
}

impl RobotAssembly {
    pub fn joint_count(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    pub fn bladder_count(&self) -> usize {
        self.segments.iter().map(|s| s.bladder_slots as usize).sum()
    }

    pub fn bladders_on(&self, branch: Branch) -> usize {
        self.segments
            .iter()
            .filter(|s| s.branch == branch)
            .map(|s| s.bladder_slots as usize)
            .sum()
    }

    /// Branch of each bladder, in head-to-tail order.
    pub fn bladder_branches(&self) -> Vec<Branch> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.branch, s.bladder_slots as usize))
            .collect()
    }

    pub fn total_mass_kg(&self) -> f64 {
        let body: f64 = self
            .segments
            .iter()
            .map(|s| s.total_mass_kg() + s.shells.iter().map(|sh| sh.mass_kg).sum::<f64>())
            .sum();
        body + self.bladder_count() as f64 * self.bladder.empty_mass_kg()
    }

    pub fn chain_length_m(&self) -> f64 {
        self.segments.len() as f64 * self.joints.segment_length_m
    }

    /// Checks every structural invariant. Returns all violations, in a fixed order.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if self.segments.is_empty() {
            errors.push(FieldError::new("segment", "at least one segment is required"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let path = format!("segment[{i}]");
            if !(seg.mass_kg > 0.0) {
                errors.push(FieldError::new(format!("{path}.mass"), "must be positive"));
            }
            if !(seg.displaced_volume_m3 > 0.0) {
                errors.push(FieldError::new(
                    format!("{path}.displaced_volume"),
                    "must be positive",
                ));
            }
            if !(seg.ballast_kg >= 0.0) {
                errors.push(FieldError::new(format!("{path}.ballast"), "must be non-negative"));
            }
            if seg.bladder_slots > MAX_BLADDERS_PER_SEGMENT {
                errors.push(FieldError::new(
                    format!("{path}.bladder_slots"),
                    format!("at most {MAX_BLADDERS_PER_SEGMENT} bladders fit over a joint"),
                ));
            }
            for (j, shell) in seg.shells.iter().enumerate() {
                let shell_path = format!("{path}.shell[{j}]");
                if !(shell.mass_kg > 0.0) {
                    errors.push(FieldError::new(format!("{shell_path}.mass"), "must be positive"));
                }
                if !(shell.displaced_volume_m3 > 0.0) {
                    errors.push(FieldError::new(
                        format!("{shell_path}.displaced_volume"),
                        "must be positive",
                    ));
                }
            }
        }
        if !(self.environment.fluid_density_kg_m3 > 0.0) {
            errors.push(FieldError::new("environment.fluid_density", "must be positive"));
        }
        if !(self.environment.gravity_m_s2 > 0.0) {
            errors.push(FieldError::new("environment.gravity", "must be positive"));
        }
        if self.bladder.major_diameter_m() > self.dimensions.system_max_diameter_m {
            errors.push(FieldError::new(
                "bladder.major_diameter",
                "exceeds the system's maximum diameter",
            ));
        }
        if self.chain_length_m() > self.dimensions.system_max_length_m {
            errors.push(FieldError::new(
                "joints.segment_length",
                format!(
                    "{} segments of {} m exceed the system length {} m",
                    self.segments.len(),
                    self.joints.segment_length_m,
                    self.dimensions.system_max_length_m
                ),
            ));
        }
        if !(self.joints.segment_length_m > 0.0) {
            errors.push(FieldError::new("joints.segment_length", "must be positive"));
        }
        for (field, v) in [
            ("joints.pitch_limit", self.joints.pitch_limit_rad),
            ("joints.yaw_limit", self.joints.yaw_limit_rad),
        ] {
            if !(v > 0.0 && v < std::f64::consts::PI) {
                errors.push(FieldError::new(field, "must be in (0, 180) deg"));
            }
        }
        if !(self.internal_pressure_gauge_pa >= 0.0) {
            errors.push(FieldError::new("environment.internal_pressure", "must be non-negative"));
        }
        if !(self.power.segment_max_w > 0.0 && self.power.system_max_w > 0.0) {
            errors.push(FieldError::new("power", "limits must be positive"));
        }
        errors.extend(self.drivetrain.validate());
        errors.extend(self.hysteresis.validate());
        errors.extend(self.pneumatics.validate());
        errors.extend(self.hydro.validate());
        errors.extend(self.bus.validate());
        errors
    }
}
