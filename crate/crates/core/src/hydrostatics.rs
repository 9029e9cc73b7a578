//! Buoyancy budgeting, torus bladder sizing and flat-pattern layout.
//!
//! Torus geometry is specified by diameters throughout. The volume formula
//! `2π² r² R` is evaluated with `r = minor/2` (tube radius) and
//! `R = major/2` (centerline radius). Reading `r` and `R` as the diameters
//! themselves would give 8× the volume: 0.0602 m / 0.16 m diameters would
//! hold 0.01144 m³, far beyond what fits over a 0.25 m joint.
//!
//! The flat-pattern rule `D_textile = D_major ± (π/2)·D_minor` is likewise
//! applied to diameters. It is linear, so reading every term as a radius
//! only rescales the result by 2.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BladderSpec, Environment, RobotAssembly, SegmentSpec};

/// Net force magnitude below which an item counts as neutral.
pub const NEUTRAL_BAND_N: f64 = 0.05;
/// Default buoyancy margin above/below neutral.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.05;
/// Extra buffer applied to the force set point when sizing a bladder.
pub const DEFAULT_SIZING_BUFFER: f64 = 0.05;
/// Relative tolerance when comparing computed forces to reported ones.
pub const REPORTED_FORCE_TOLERANCE: f64 = 0.02;

/// `ρ·g·V`.
pub fn buoyant_force(volume_m3: f64, fluid_density: f64, g: f64) -> Result<f64> {
    if !(volume_m3 >= 0.0) {
        return Err(Error::arg("volume", format!("{volume_m3} m³ must be non-negative")));
    }
    if !(fluid_density > 0.0) {
        return Err(Error::arg("fluid_density", "must be positive"));
    }
    Ok(fluid_density * g * volume_m3)
}

/// Buoyant force minus weight. Positive floats.
pub fn net_vertical_force(mass_kg: f64, volume_m3: f64, fluid_density: f64, g: f64) -> Result<f64> {
    if !(mass_kg > 0.0) {
        return Err(Error::arg("mass", format!("{mass_kg} kg must be positive")));
    }
    Ok(buoyant_force(volume_m3, fluid_density, g)? - mass_kg * g)
}

fn check_torus(minor_diameter_m: f64, major_diameter_m: f64) -> Result<()> {
    if !(minor_diameter_m >= 0.0) {
        return Err(Error::arg("minor_diameter", "must be non-negative"));
    }
    if !(major_diameter_m > 0.0) {
        return Err(Error::arg("major_diameter", "must be positive"));
    }
    if minor_diameter_m >= major_diameter_m {
        return Err(Error::arg(
            "minor_diameter",
            format!("{minor_diameter_m} m must be smaller than the major diameter {major_diameter_m} m"),
        ));
    }
    Ok(())
}

/// Volume of a torus given its tube diameter and centerline diameter.
pub fn torus_volume(minor_diameter_m: f64, major_diameter_m: f64) -> Result<f64> {
    check_torus(minor_diameter_m, major_diameter_m)?;
    let r = minor_diameter_m / 2.0;
    let big_r = major_diameter_m / 2.0;
    Ok(2.0 * PI * PI * r * r * big_r)
}

/// Tube diameter that gives `target_volume_m3` at the given centerline diameter.
pub fn solve_bladder_geometry(
    target_volume_m3: f64,
    major_diameter_m: f64,
    max_envelope_diameter_m: f64,
) -> Result<f64> {
    if !(target_volume_m3 >= 0.0) {
        return Err(Error::arg("target_volume", "must be non-negative"));
    }
    if !(major_diameter_m > 0.0) {
        return Err(Error::arg("major_diameter", "must be positive"));
    }
    if major_diameter_m > max_envelope_diameter_m {
        return Err(Error::Infeasible(format!(
            "major diameter {major_diameter_m} m exceeds the {max_envelope_diameter_m} m envelope"
        )));
    }
    let big_r = major_diameter_m / 2.0;
    let r = (target_volume_m3 / (2.0 * PI * PI * big_r)).sqrt();
    let minor = 2.0 * r;
    if minor >= major_diameter_m {
        return Err(Error::Infeasible(format!(
            "{target_volume_m3} m³ needs a {minor:.4} m tube, not smaller than the {major_diameter_m} m major diameter"
        )));
    }
    Ok(minor)
}

/// Outline of the flat textile ring that inflates into the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatPattern {
    pub outer_textile_diameter_m: f64,
    pub inner_textile_diameter_m: f64,
    pub seam_allowance_m: f64,
}

impl FlatPattern {
    /// Recovers `(major, minor)` diameters from the ring outline.
    pub fn torus_diameters(&self) -> (f64, f64) {
        let major = 0.5 * (self.outer_textile_diameter_m + self.inner_textile_diameter_m);
        let minor = (self.outer_textile_diameter_m - self.inner_textile_diameter_m) / PI;
        (major, minor)
    }

    /// Cut line including the seam allowance on both edges.
    pub fn cut_outer_diameter_m(&self) -> f64 {
        self.outer_textile_diameter_m + 2.0 * self.seam_allowance_m
    }

    pub fn cut_inner_diameter_m(&self) -> f64 {
        (self.inner_textile_diameter_m - 2.0 * self.seam_allowance_m).max(0.0)
    }
}

pub fn flat_pattern(major_diameter_m: f64, minor_diameter_m: f64) -> Result<FlatPattern> {
    flat_pattern_with_seam(major_diameter_m, minor_diameter_m, 0.0)
}

pub fn flat_pattern_with_seam(
    major_diameter_m: f64,
    minor_diameter_m: f64,
    seam_allowance_m: f64,
) -> Result<FlatPattern> {
    if minor_diameter_m > 0.0 {
        check_torus(minor_diameter_m, major_diameter_m)?;
    } else if !(minor_diameter_m == 0.0 && major_diameter_m > 0.0) {
        return Err(Error::arg("diameters", "need 0 <= minor < major"));
    }
    if !(seam_allowance_m >= 0.0) {
        return Err(Error::arg("seam_allowance", "must be non-negative"));
    }
    let spread = FRAC_PI_2 * minor_diameter_m;
    let inner = major_diameter_m - spread;
    // rounding in (π/2)·minor must not let the exact boundary through
    if inner <= 4.0 * f64::EPSILON * major_diameter_m {
        return Err(Error::Infeasible(format!(
            "inner textile diameter {inner:.6} m is not positive; the ring cannot be cut"
        )));
    }
    Ok(FlatPattern {
        outer_textile_diameter_m: major_diameter_m + spread,
        inner_textile_diameter_m: inner,
        seam_allowance_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Sinks,
    Floats,
    Neutral,
}

impl Classification {
    pub fn of(net_force_n: f64) -> Self {
        if net_force_n.abs() <= NEUTRAL_BAND_N {
            Classification::Neutral
        } else if net_force_n > 0.0 {
            Classification::Floats
        } else {
            Classification::Sinks
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Sinks => "sinks",
            Classification::Floats => "floats",
            Classification::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuoyancyReportRow {
    pub item: String,
    pub weight_n: f64,
    pub buoyant_force_n: f64,
    pub net_force_n: f64,
    /// Buoyant force over weight.
    pub buoyancy_fraction: f64,
    pub classification: Classification,
    /// Position along the chain, positive toward the head, from its midpoint.
    pub station_m: f64,
}

impl BuoyancyReportRow {
    pub fn new(item: impl Into<String>, weight_n: f64, buoyant_force_n: f64, station_m: f64) -> Self {
        let net_force_n = buoyant_force_n - weight_n;
        let buoyancy_fraction = if weight_n > 0.0 {
            buoyant_force_n / weight_n
        } else {
            f64::INFINITY
        };
        Self {
            item: item.into(),
            weight_n,
            buoyant_force_n,
            net_force_n,
            buoyancy_fraction,
            classification: Classification::of(net_force_n),
            station_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuoyancyReport {
    pub rows: Vec<BuoyancyReportRow>,
    pub total_weight_n: f64,
    pub total_buoyant_force_n: f64,
    pub total_net_force_n: f64,
    /// Static pitch moment of the net forces about the chain midpoint (head-up positive).
    pub pitch_moment_nm: f64,
}

impl BuoyancyReport {
    pub fn from_rows(rows: Vec<BuoyancyReportRow>) -> Self {
        let total_weight_n = rows.iter().map(|r| r.weight_n).sum();
        let total_buoyant_force_n = rows.iter().map(|r| r.buoyant_force_n).sum();
        let total_net_force_n = rows.iter().map(|r| r.net_force_n).sum();
        let pitch_moment_nm = rows.iter().map(|r| r.net_force_n * r.station_m).sum();
        Self {
            rows,
            total_weight_n,
            total_buoyant_force_n,
            total_net_force_n,
            pitch_moment_nm,
        }
    }

    pub fn classification(&self) -> Classification {
        Classification::of(self.total_net_force_n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,weight_n,buoyant_n,net_n,fraction,class\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{:.4},{}\n",
                r.item,
                r.weight_n,
                r.buoyant_force_n,
                r.net_force_n,
                r.buoyancy_fraction,
                r.classification.as_str()
            ));
        }
        out
    }
}

/// Per-item buoyancy for a list of segments with their shells and bladders.
///
/// `bladder_fill` holds one fill fraction per bladder in head-to-tail order.
/// A partially filled bladder displaces `fill × full volume`.
pub fn segments_buoyancy_report(
    segments: &[SegmentSpec],
    bladder: &BladderSpec,
    env: &Environment,
    segment_length_m: f64,
    bladder_fill: &[f64],
) -> Result<BuoyancyReport> {
    let bladders: usize = segments.iter().map(|s| s.bladder_slots as usize).sum();
    if bladder_fill.len() != bladders {
        return Err(Error::arg(
            "bladder_fill",
            format!("expected {bladders} fill fractions, got {}", bladder_fill.len()),
        ));
    }
    if let Some(bad) = bladder_fill.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::arg("bladder_fill", format!("fill fraction {bad} outside [0, 1]")));
    }
    let rho = env.fluid_density_kg_m3;
    let g = env.gravity_m_s2;
    let half_length = 0.5 * segments.len() as f64 * segment_length_m;
    let mut rows = Vec::new();
    let mut fills = bladder_fill.iter();
    for (i, seg) in segments.iter().enumerate() {
        let station = half_length - (i as f64 + 0.5) * segment_length_m;
        rows.push(BuoyancyReportRow::new(
            seg.name.clone(),
            seg.total_mass_kg() * g,
            buoyant_force(seg.displaced_volume_m3, rho, g)?,
            station,
        ));
        for shell in &seg.shells {
            rows.push(BuoyancyReportRow::new(
                format!("{}/{}", seg.name, shell.name),
                shell.mass_kg * g,
                buoyant_force(shell.displaced_volume_m3, rho, g)?,
                station,
            ));
        }
        for k in 0..seg.bladder_slots {
            let fill = *fills.next().expect("length checked above");
            rows.push(BuoyancyReportRow::new(
                format!("{}/bladder{}", seg.name, k + 1),
                bladder.empty_mass_kg() * g,
                buoyant_force(fill * bladder.full_volume_m3(), rho, g)?,
                station,
            ));
        }
    }
    Ok(BuoyancyReport::from_rows(rows))
}

pub fn assembly_buoyancy_report(assembly: &RobotAssembly, bladder_fill: &[f64]) -> Result<BuoyancyReport> {
    segments_buoyancy_report(
        &assembly.segments,
        &assembly.bladder,
        &assembly.environment,
        assembly.joints.segment_length_m,
        bladder_fill,
    )
}

/// Expands per-branch fill fractions into per-bladder ones.
pub fn fill_by_branch(assembly: &RobotAssembly, front: f64, rear: f64) -> Vec<f64> {
    use crate::model::Branch;
    assembly
        .bladder_branches()
        .into_iter()
        .map(|b| match b {
            Branch::Front => front,
            Branch::Rear => rear,
        })
        .collect()
}

/// Net upward force on the whole robot for the given branch fill fractions.
pub fn assembly_net_force(assembly: &RobotAssembly, front: f64, rear: f64) -> Result<f64> {
    let fill = fill_by_branch(assembly, front, rear);
    Ok(assembly_buoyancy_report(assembly, &fill)?.total_net_force_n)
}

/// Force a bladder must supply to lift a group of rows to a buoyancy margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BladderForceRequirement {
    /// Force needed to reach neutral.
    pub deficit_n: f64,
    /// Deficit plus the margin on displaced-water weight.
    pub setpoint_n: f64,
    /// Set point with the sizing buffer applied.
    pub buffered_n: f64,
}

/// The margin is taken on the displaced-water weight of the rows.
pub fn required_bladder_force(
    rows: &[BuoyancyReportRow],
    margin_fraction: f64,
    sizing_buffer: f64,
) -> Result<BladderForceRequirement> {
    if !(margin_fraction >= 0.0) {
        return Err(Error::arg("margin_fraction", "must be non-negative"));
    }
    if !(sizing_buffer >= 0.0) {
        return Err(Error::arg("sizing_buffer", "must be non-negative"));
    }
    let net: f64 = rows.iter().map(|r| r.net_force_n).sum();
    let displaced_weight: f64 = rows.iter().map(|r| r.buoyant_force_n).sum();
    let deficit_n = -net;
    let setpoint_n = (deficit_n + margin_fraction * displaced_weight).max(0.0);
    Ok(BladderForceRequirement {
        deficit_n,
        setpoint_n,
        buffered_n: setpoint_n * (1.0 + sizing_buffer),
    })
}

/// Displaced volume for a bladder of `empty_mass_kg` to supply `net_force_n`.
pub fn bladder_volume_for_force(net_force_n: f64, empty_mass_kg: f64, env: &Environment) -> Result<f64> {
    if !(net_force_n >= 0.0) {
        return Err(Error::arg("net_force", "must be non-negative"));
    }
    let g = env.gravity_m_s2;
    Ok((net_force_n + empty_mass_kg * g) / (env.fluid_density_kg_m3 * g))
}

/// A computed net force that disagrees with the value printed next to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportedForceCheck {
    pub item: String,
    pub computed_n: f64,
    pub reported_n: f64,
    pub relative_error: f64,
    pub within_tolerance: bool,
}

impl ReportedForceCheck {
    fn new(item: String, computed_n: f64, reported_n: f64) -> Self {
        let relative_error = ((computed_n - reported_n) / reported_n).abs();
        Self {
            item,
            computed_n,
            reported_n,
            relative_error,
            within_tolerance: relative_error <= REPORTED_FORCE_TOLERANCE,
        }
    }

    pub fn warning(&self) -> String {
        format!(
            "{}: reported net force {:.2} N disagrees with {:.2} N computed from mass and volume ({:.1}% off)",
            self.item,
            self.reported_n,
            self.computed_n,
            100.0 * self.relative_error
        )
    }
}

/// Compares every reported net force in the manifest against mass and volume.
pub fn check_reported_forces(
    segments: &[SegmentSpec],
    bladder: &BladderSpec,
    env: &Environment,
) -> Result<Vec<ReportedForceCheck>> {
    let rho = env.fluid_density_kg_m3;
    let g = env.gravity_m_s2;
    let mut checks = Vec::new();
    for seg in segments {
        if let Some(reported) = seg.reported_net_force_n {
            let computed = net_vertical_force(seg.total_mass_kg(), seg.displaced_volume_m3, rho, g)?;
            checks.push(ReportedForceCheck::new(seg.name.clone(), computed, reported));
        }
        for shell in &seg.shells {
            if let Some(reported) = shell.reported_net_force_n {
                let computed = net_vertical_force(shell.mass_kg, shell.displaced_volume_m3, rho, g)?;
                checks.push(ReportedForceCheck::new(
                    format!("{}/{}", seg.name, shell.name),
                    computed,
                    reported,
                ));
            }
        }
    }
    if let Some(reported) = bladder.reported_net_force_n() {
        let computed = net_vertical_force(bladder.empty_mass_kg(), bladder.full_volume_m3(), rho, g)?;
        checks.push(ReportedForceCheck::new("bladder".into(), computed, reported));
    }
    Ok(checks)
}
