use nalgebra::{Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Pitch/yaw of one U-joint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointAngles {
    pub pitch_rad: f64,
    pub yaw_rad: f64,
}

impl JointAngles {
    pub fn new(pitch_rad: f64, yaw_rad: f64) -> Self {
        Self { pitch_rad, yaw_rad }
    }

    pub fn within(&self, pitch_limit: f64, yaw_limit: f64) -> bool {
        self.pitch_rad.abs() <= pitch_limit && self.yaw_rad.abs() <= yaw_limit
    }

    /// Yaw about the body z axis, then pitch nose-up about the body y axis.
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.yaw_rad)
            * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -self.pitch_rad)
    }
}

/// Pose at a segment boundary. Segments run along the local +x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFrame {
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

/// Frames at every segment boundary, head first.
///
/// A chain of `joints.len() + 1` segments yields `joints.len() + 2` frames.
/// Frame `i + 1` is frame `i` advanced one segment length along its heading
/// and then turned by joint `i`.
pub fn forward_kinematics(joints: &[JointAngles], segment_length_m: f64) -> Vec<SegmentFrame> {
    let mut frames = Vec::with_capacity(joints.len() + 2);
    let mut frame = SegmentFrame {
        position: Point3::origin(),
        orientation: UnitQuaternion::identity(),
    };
    frames.push(frame);
    let step = Vector3::new(segment_length_m, 0.0, 0.0);
    for i in 0..=joints.len() {
        let position = frame.position + frame.orientation * step;
        let orientation = match joints.get(i) {
            Some(j) => frame.orientation * j.rotation(),
            None => frame.orientation,
        };
        frame = SegmentFrame { position, orientation };
        frames.push(frame);
    }
    frames
}

pub fn segment_midpoints(frames: &[SegmentFrame]) -> Vec<Point3<f64>> {
    frames
        .windows(2)
        .map(|w| nalgebra::center(&w[0].position, &w[1].position))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    const L: f64 = 0.441;

    #[test]
    fn straight_chain() {
        let frames = forward_kinematics(&[JointAngles::default(); 3], L);
        assert_eq!(frames.len(), 5);
        let tail = frames.last().unwrap().position;
        assert!((tail.x - 1.764).abs() < 1e-12);
        assert!(tail.y.abs() < 1e-12 && tail.z.abs() < 1e-12);
    }

    #[test]
    fn quarter_pitch_is_perpendicular() {
        let frames = forward_kinematics(&[JointAngles::new(FRAC_PI_2, 0.0)], L);
        let first = frames[1].position - frames[0].position;
        let second = frames[2].position - frames[1].position;
        assert!(first.dot(&second).abs() < 1e-12);
        assert!(second.z > 0.0);
    }

    /// Circle through three points, computed independently of the chain code.
    fn circumcircle(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) -> (f64, f64, f64) {
        let (ax, ay, bx, by, cx, cy) = (a.x, a.y, b.x, b.y, c.x, c.y);
        let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        let ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d;
        let uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d;
        let r = ((ax - ux).powi(2) + (ay - uy).powi(2)).sqrt();
        (ux, uy, r)
    }

    #[test]
    fn equal_yaw_midpoints_share_a_circle() {
        for deg in [10.0f64, 30.0, 45.0, 80.0] {
            let theta = deg.to_radians();
            let joints = vec![JointAngles::new(0.0, theta); 5];
            let mids = segment_midpoints(&forward_kinematics(&joints, L));
            let (cx, cy, r) = circumcircle(mids[0], mids[1], mids[2]);
            let expected = L / (2.0 * (theta / 2.0).tan());
            assert!((r - expected).abs() < 1e-9, "{deg}: {r} vs {expected}");
            for m in &mids {
                let d = ((m.x - cx).powi(2) + (m.y - cy).powi(2)).sqrt();
                assert!((d - expected).abs() < 1e-9);
                assert!(m.z.abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn chain_length_preserved(angles in proptest::collection::vec((-FRAC_PI_2..FRAC_PI_2, -FRAC_PI_2..FRAC_PI_2), 0..8)) {
            let joints: Vec<_> = angles.iter().map(|&(p, y)| JointAngles::new(p, y)).collect();
            let frames = forward_kinematics(&joints, L);
            let total: f64 = frames.windows(2).map(|w| (w[1].position - w[0].position).norm()).sum();
            prop_assert!((total - L * (joints.len() + 1) as f64).abs() < 1e-9);
        }
    }
}
