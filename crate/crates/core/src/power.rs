//! Electrical draw against the per-segment and system ceilings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::RobotAssembly;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentPower {
    pub segment: String,
    pub draw_w: f64,
    pub limit_w: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub segments: Vec<SegmentPower>,
    pub system_draw_w: f64,
    pub system_limit_w: f64,
    pub system_pass: bool,
}

impl PowerReport {
    pub fn pass(&self) -> bool {
        self.system_pass && self.segments.iter().all(|s| s.pass)
    }
}

/// `draws_w[i]` is the total actuator draw of segment `i`.
pub fn power_budget_check(assembly: &RobotAssembly, draws_w: &[f64]) -> Result<PowerReport> {
    if draws_w.len() != assembly.segments.len() {
        return Err(Error::arg(
            "draws",
            format!("expected {} values, got {}", assembly.segments.len(), draws_w.len()),
        ));
    }
    if draws_w.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::arg("draws", "must be non-negative"));
    }
    let limit = assembly.power.segment_max_w;
    let segments = assembly
        .segments
        .iter()
        .zip(draws_w)
        .map(|(seg, &draw_w)| SegmentPower {
            segment: seg.name.clone(),
            draw_w,
            limit_w: limit,
            pass: draw_w <= limit,
        })
        .collect();
    let system_draw_w: f64 = draws_w.iter().sum();
    Ok(PowerReport {
        segments,
        system_draw_w,
        system_limit_w: assembly.power.system_max_w,
        system_pass: system_draw_w <= assembly.power.system_max_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_assembly;

    #[test]
    fn over_limit_segment_flagged() {
        let a = default_assembly();
        let r = power_budget_check(&a, &[250.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(!r.segments[0].pass);
        assert!(r.segments[1..].iter().all(|s| s.pass));
        assert!(r.system_pass);
        assert!(!r.pass());
    }

    #[test]
    fn full_draw_passes_at_boundary() {
        let a = default_assembly();
        let r = power_budget_check(&a, &[240.0; 4]).unwrap();
        assert_eq!(r.system_draw_w, 960.0);
        assert!(r.pass());
    }

    #[test]
    fn zero_draw_passes() {
        let a = default_assembly();
        assert!(power_budget_check(&a, &[0.0; 4]).unwrap().pass());
        assert!(power_budget_check(&a, &[-1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(power_budget_check(&a, &[0.0; 3]).is_err());
    }
}
