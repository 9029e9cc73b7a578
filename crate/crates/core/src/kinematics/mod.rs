//! Serial-chain geometry, gait generation, joint backlash and the screw
//! drivetrain.

mod chain;
mod drivetrain;
mod gait;
mod hysteresis;

pub use chain::{forward_kinematics, segment_midpoints, JointAngles, SegmentFrame};
pub use drivetrain::{
    screw_output, DrivetrainSpec, ScrewOutput, MEASURED_FORCE_HIGH, MEASURED_FORCE_LOW,
};
pub use gait::{
    angle_for_radius, gait_screwing, gait_sidewinding, gait_wheeling, min_turn_radius,
    radius_for_angle, GaitCommand, GaitMode, SidewindingParams, MAX_SCREW_SPEED_RAD_S,
};
pub use hysteresis::{
    apply_hysteresis, fit_width_model, hysteresis_sweep, loop_area, loop_width, HysteresisModel,
    PlayState, WidthFit,
};
