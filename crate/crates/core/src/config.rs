//! Manifest loading. Every physical quantity in the document is a string
//! with a unit suffix, converted to SI here and nowhere else.

use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::comms::{BusTopology, Jitter};
use crate::error::{Error, Result};
use crate::hydrostatics::check_reported_forces;
use crate::kinematics::{DrivetrainSpec, HysteresisModel};
use crate::model::{
    BladderSpec, Branch, Dimensions, Environment, JointSpec, PowerLimits, RobotAssembly, SegmentSpec,
    ShellSpec, DEFAULT_INTERNAL_PRESSURE_PA,
};
use crate::pneumatics::{BranchSpec, PneumaticNetwork, TubeRun, DEFAULT_AIR_DENSITY, DEFAULT_SUPPLY_PA};
use crate::units::{parse_quantity, Dimension};
use crate::vertical::HydroParams;

/// The shipped four-segment build.
pub const DEFAULT_MANIFEST: &str = include_str!("../assets/default_assembly.toml");

type Q = Spanned<String>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    name: String,
    internal_pressure: Option<Q>,
    environment: Option<RawEnvironment>,
    power: Option<RawPower>,
    dimensions: Option<RawDimensions>,
    joints: Option<RawJoints>,
    bladder: RawBladder,
    #[serde(default)]
    segment: Vec<RawSegment>,
    drivetrain: Option<RawDrivetrain>,
    hysteresis: Option<RawHysteresis>,
    pneumatics: RawPneumatics,
    hydro: Option<RawHydro>,
    bus: Option<RawBus>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    fluid_density: Option<Q>,
    gravity: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPower {
    segment_max: Option<Q>,
    system_max: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDimensions {
    max_length: Option<Q>,
    max_diameter: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoints {
    segment_length: Option<Q>,
    pitch_limit: Option<Q>,
    yaw_limit: Option<Q>,
    continuous_torque: Option<Q>,
    peak_torque: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBladder {
    minor_diameter: Q,
    major_diameter: Q,
    empty_mass: Q,
    settle_pressure: Option<Q>,
    reported_net_force: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    name: String,
    mass: Q,
    ballast: Option<Q>,
    displaced_volume: Q,
    #[serde(default)]
    bladders: u8,
    branch: Spanned<String>,
    reported_net_force: Option<Q>,
    #[serde(default)]
    shell: Vec<RawShell>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShell {
    name: String,
    mass: Q,
    displaced_volume: Q,
    #[serde(default)]
    foam_filled: bool,
    reported_net_force: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrivetrain {
    motor_max_torque: Option<Q>,
    gear_ratio: Option<f64>,
    effective_screw_radius: Option<Q>,
    ujoint_internal_ratio: Option<f64>,
    ujoint_external_ratio: Option<f64>,
    screw_continuous_torque: Option<Q>,
    screw_peak_torque: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHysteresis {
    width_intercept: Option<Q>,
    width_slope: Option<Q>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPneumatics {
    regulator: Q,
    supply: Option<Q>,
    air_density: Option<Q>,
    #[serde(default)]
    branch: Vec<RawBranch>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    name: Spanned<String>,
    fill_resistance: Q,
    vent_resistance: Q,
    #[serde(default)]
    tube: Vec<RawTube>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTube {
    length: Q,
    inner_diameter: Q,
    friction_factor: f64,
    #[serde(default)]
    minor_losses: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHydro {
    drag_coefficient: Option<Q>,
    added_mass: Option<Q>,
    tank_depth: Option<Q>,
    window: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBus {
    nodes: Option<usize>,
    first_hop: Option<Q>,
    increment: Option<Q>,
    jitter: Option<Q>,
}

/// Converts spanned strings with access to the source for line numbers.
struct Reader<'a> {
    source: &'a str,
}

impl Reader<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.source[..offset.min(self.source.len())].matches('\n').count() + 1
    }

    fn fail(&self, span: std::ops::Range<usize>, field: &str, err: impl std::fmt::Display) -> Error {
        Error::Parse {
            line: self.line_of(span.start),
            message: format!("{field}: {err}"),
        }
    }

    fn q(&self, value: &Q, field: &str, dim: Dimension) -> Result<f64> {
        parse_quantity(value.get_ref(), dim).map_err(|e| self.fail(value.span(), field, e))
    }

    fn opt(&self, value: Option<&Q>, field: &str, dim: Dimension, default: f64) -> Result<f64> {
        value.map_or(Ok(default), |v| self.q(v, field, dim))
    }

    fn branch(&self, value: &Spanned<String>, field: &str) -> Result<Branch> {
        value
            .get_ref()
            .parse()
            .map_err(|e| self.fail(value.span(), field, e))
    }
}

pub fn load_assembly(source: &str) -> Result<RobotAssembly> {
    let raw: RawManifest = toml::from_str(source).map_err(|e| {
        let line = e.span().map_or(0, |s| source[..s.start.min(source.len())].matches('\n').count() + 1);
        Error::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    let r = Reader { source };
    use Dimension as D;

    let env_raw = raw.environment.as_ref();
    let environment = Environment {
        fluid_density_kg_m3: r.opt(
            env_raw.and_then(|e| e.fluid_density.as_ref()),
            "environment.fluid_density",
            D::Density,
            Environment::default().fluid_density_kg_m3,
        )?,
        gravity_m_s2: r.opt(
            env_raw.and_then(|e| e.gravity.as_ref()),
            "environment.gravity",
            D::Acceleration,
            Environment::default().gravity_m_s2,
        )?,
    };

    let pw = raw.power.as_ref();
    let power = PowerLimits {
        segment_max_w: r.opt(pw.and_then(|p| p.segment_max.as_ref()), "power.segment_max", D::Power, PowerLimits::default().segment_max_w)?,
        system_max_w: r.opt(pw.and_then(|p| p.system_max.as_ref()), "power.system_max", D::Power, PowerLimits::default().system_max_w)?,
    };

    let dm = raw.dimensions.as_ref();
    let dimensions = Dimensions {
        system_max_length_m: r.opt(
            dm.and_then(|d| d.max_length.as_ref()),
            "dimensions.max_length",
            D::Length,
            Dimensions::default().system_max_length_m,
        )?,
        system_max_diameter_m: r.opt(
            dm.and_then(|d| d.max_diameter.as_ref()),
            "dimensions.max_diameter",
            D::Length,
            Dimensions::default().system_max_diameter_m,
        )?,
    };

    let jd = JointSpec::default();
    let jr = raw.joints.as_ref();
    let joints = JointSpec {
        segment_length_m: r.opt(jr.and_then(|j| j.segment_length.as_ref()), "joints.segment_length", D::Length, jd.segment_length_m)?,
        pitch_limit_rad: r.opt(jr.and_then(|j| j.pitch_limit.as_ref()), "joints.pitch_limit", D::Angle, jd.pitch_limit_rad)?,
        yaw_limit_rad: r.opt(jr.and_then(|j| j.yaw_limit.as_ref()), "joints.yaw_limit", D::Angle, jd.yaw_limit_rad)?,
        continuous_torque_nm: r.opt(
            jr.and_then(|j| j.continuous_torque.as_ref()),
            "joints.continuous_torque",
            D::Torque,
            jd.continuous_torque_nm,
        )?,
        peak_torque_nm: r.opt(jr.and_then(|j| j.peak_torque.as_ref()), "joints.peak_torque", D::Torque, jd.peak_torque_nm)?,
    };

    let b = &raw.bladder;
    let bladder = BladderSpec::new(
        r.q(&b.minor_diameter, "bladder.minor_diameter", D::Length)?,
        r.q(&b.major_diameter, "bladder.major_diameter", D::Length)?,
        r.q(&b.empty_mass, "bladder.empty_mass", D::Mass)?,
        r.opt(
            b.settle_pressure.as_ref(),
            "bladder.settle_pressure",
            D::Pressure,
            crate::model::DEFAULT_SETTLE_PRESSURE_PA,
        )?,
    )?
    .with_reported_net_force(
        b.reported_net_force
            .as_ref()
            .map(|f| r.q(f, "bladder.reported_net_force", D::Force))
            .transpose()?,
    );

    let mut segments = Vec::with_capacity(raw.segment.len());
    for (i, s) in raw.segment.iter().enumerate() {
        let path = format!("segment[{i}]");
        let mut shells = Vec::with_capacity(s.shell.len());
        for (j, sh) in s.shell.iter().enumerate() {
            let sp = format!("{path}.shell[{j}]");
            shells.push(ShellSpec {
                name: sh.name.clone(),
                mass_kg: r.q(&sh.mass, &format!("{sp}.mass"), D::Mass)?,
                displaced_volume_m3: r.q(&sh.displaced_volume, &format!("{sp}.displaced_volume"), D::Volume)?,
                foam_filled: sh.foam_filled,
                reported_net_force_n: sh
                    .reported_net_force
                    .as_ref()
                    .map(|f| r.q(f, &format!("{sp}.reported_net_force"), D::Force))
                    .transpose()?,
            });
        }
        segments.push(SegmentSpec {
            name: s.name.clone(),
            mass_kg: r.q(&s.mass, &format!("{path}.mass"), D::Mass)?,
            ballast_kg: r.opt(s.ballast.as_ref(), &format!("{path}.ballast"), D::Mass, 0.0)?,
            displaced_volume_m3: r.q(&s.displaced_volume, &format!("{path}.displaced_volume"), D::Volume)?,
            shells,
            bladder_slots: s.bladders,
            branch: r.branch(&s.branch, &format!("{path}.branch"))?,
            reported_net_force_n: s
                .reported_net_force
                .as_ref()
                .map(|f| r.q(f, &format!("{path}.reported_net_force"), D::Force))
                .transpose()?,
        });
    }

    let dd = DrivetrainSpec::default();
    let dr = raw.drivetrain.as_ref();
    let drivetrain = DrivetrainSpec {
        motor_max_torque_nm: r.opt(
            dr.and_then(|d| d.motor_max_torque.as_ref()),
            "drivetrain.motor_max_torque",
            D::Torque,
            dd.motor_max_torque_nm,
        )?,
        gear_ratio: dr.and_then(|d| d.gear_ratio).unwrap_or(dd.gear_ratio),
        effective_screw_radius_m: r.opt(
            dr.and_then(|d| d.effective_screw_radius.as_ref()),
            "drivetrain.effective_screw_radius",
            D::Length,
            dd.effective_screw_radius_m,
        )?,
        ujoint_internal_ratio: dr.and_then(|d| d.ujoint_internal_ratio).unwrap_or(dd.ujoint_internal_ratio),
        ujoint_external_ratio: dr.and_then(|d| d.ujoint_external_ratio).unwrap_or(dd.ujoint_external_ratio),
        screw_continuous_torque_nm: r.opt(
            dr.and_then(|d| d.screw_continuous_torque.as_ref()),
            "drivetrain.screw_continuous_torque",
            D::Torque,
            dd.screw_continuous_torque_nm,
        )?,
        screw_peak_torque_nm: r.opt(
            dr.and_then(|d| d.screw_peak_torque.as_ref()),
            "drivetrain.screw_peak_torque",
            D::Torque,
            dd.screw_peak_torque_nm,
        )?,
    };

    let hd = HysteresisModel::default();
    let hr = raw.hysteresis.as_ref();
    let hysteresis = HysteresisModel {
        width_intercept_rad: r.opt(
            hr.and_then(|h| h.width_intercept.as_ref()),
            "hysteresis.width_intercept",
            D::Angle,
            hd.width_intercept_rad,
        )?,
        width_slope_rad_per_kg: r.opt(
            hr.and_then(|h| h.width_slope.as_ref()),
            "hysteresis.width_slope",
            D::AnglePerMass,
            hd.width_slope_rad_per_kg,
        )?,
    };

    let p = &raw.pneumatics;
    let mut branches = Vec::with_capacity(p.branch.len());
    for (i, br) in p.branch.iter().enumerate() {
        let path = format!("pneumatics.branch[{i}]");
        let mut runs = Vec::with_capacity(br.tube.len());
        for (j, t) in br.tube.iter().enumerate() {
            let tp = format!("{path}.tube[{j}]");
            runs.push(TubeRun {
                length_m: r.q(&t.length, &format!("{tp}.length"), D::Length)?,
                inner_diameter_m: r.q(&t.inner_diameter, &format!("{tp}.inner_diameter"), D::Length)?,
                darcy_friction_factor: t.friction_factor,
                minor_loss_coefficients: t.minor_losses.clone(),
            });
        }
        branches.push(BranchSpec {
            branch: r.branch(&br.name, &format!("{path}.name"))?,
            runs,
            fill_resistance: r.q(&br.fill_resistance, &format!("{path}.fill_resistance"), D::FlowResistance)?,
            vent_resistance: r.q(&br.vent_resistance, &format!("{path}.vent_resistance"), D::FlowResistance)?,
        });
    }
    let pneumatics = PneumaticNetwork {
        regulator_setpoint_pa: r.q(&p.regulator, "pneumatics.regulator", D::Pressure)?,
        supply_pa: r.opt(p.supply.as_ref(), "pneumatics.supply", D::Pressure, DEFAULT_SUPPLY_PA)?,
        air_density_kg_m3: r.opt(p.air_density.as_ref(), "pneumatics.air_density", D::Density, DEFAULT_AIR_DENSITY)?,
        branches,
    };

    let hyd = HydroParams::default();
    let hr = raw.hydro.as_ref();
    let window = hr.and_then(|h| h.window).unwrap_or([hyd.window_start_fraction, hyd.window_end_fraction]);
    let hydro = HydroParams {
        drag_coefficient: r.opt(
            hr.and_then(|h| h.drag_coefficient.as_ref()),
            "hydro.drag_coefficient",
            D::DragCoefficient,
            hyd.drag_coefficient,
        )?,
        added_mass_kg: r.opt(hr.and_then(|h| h.added_mass.as_ref()), "hydro.added_mass", D::Mass, hyd.added_mass_kg)?,
        tank_depth_m: r.opt(hr.and_then(|h| h.tank_depth.as_ref()), "hydro.tank_depth", D::Length, hyd.tank_depth_m)?,
        window_start_fraction: window[0],
        window_end_fraction: window[1],
    };

    let bd = BusTopology::default();
    let bus_raw = raw.bus.as_ref();
    let seconds_to_ns = |v: Option<&Q>, field: &str, default: u64| -> Result<u64> {
        match v {
            None => Ok(default),
            Some(q) => {
                let s = r.q(q, field, D::Time)?;
                crate::comms::s_to_ns(s).map_err(|e| r.fail(q.span(), field, e))
            }
        }
    };
    let jitter_ns = seconds_to_ns(bus_raw.and_then(|b| b.jitter.as_ref()), "bus.jitter", 0)?;
    let bus = BusTopology {
        nodes: bus_raw.and_then(|b| b.nodes).unwrap_or(bd.nodes),
        first_hop_ns: seconds_to_ns(bus_raw.and_then(|b| b.first_hop.as_ref()), "bus.first_hop", bd.first_hop_ns)?,
        increment_ns: seconds_to_ns(bus_raw.and_then(|b| b.increment.as_ref()), "bus.increment", bd.increment_ns)?,
        jitter: if jitter_ns == 0 {
            Jitter::None
        } else {
            Jitter::Uniform { bound_ns: jitter_ns }
        },
    };

    let internal_pressure_gauge_pa = r.opt(
        raw.internal_pressure.as_ref(),
        "internal_pressure",
        D::Pressure,
        DEFAULT_INTERNAL_PRESSURE_PA,
    )?;

    let mut assembly = RobotAssembly {
        name: raw.name,
        segments,
        bladder,
        joints,
        drivetrain,
        hysteresis,
        pneumatics,
        hydro,
        bus,
        environment,
        power,
        dimensions,
        internal_pressure_gauge_pa,
        warnings: Vec::new(),
    };
    let errors = assembly.validate();
    if !errors.is_empty() {
        return Err(Error::Invalid(errors));
    }
    assembly.warnings = check_reported_forces(&assembly.segments, &assembly.bladder, &assembly.environment)?
        .into_iter()
        .filter(|c| !c.within_tolerance)
        .map(|c| c.warning())
        .collect();
    Ok(assembly)
}

pub fn load_assembly_file(path: impl AsRef<Path>) -> Result<RobotAssembly> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    load_assembly(&text)
}

/// The shipped manifest. It is validated by the test suite, so a failure
/// here is a build defect.
pub fn default_assembly() -> RobotAssembly {
    load_assembly(DEFAULT_MANIFEST).expect("shipped manifest is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PA_PER_PSI;

    #[test]
    fn shipped_manifest_loads() {
        let a = default_assembly();
        assert_eq!(a.segments.len(), 4);
        let mid = &a.segments[1];
        assert_eq!(mid.mass_kg, 5.386);
        assert_eq!(mid.displaced_volume_m3, 0.00339);
        assert!((a.internal_pressure_gauge_pa - 41368.5).abs() < 0.1);
        assert!((a.internal_pressure_gauge_pa - 6.0 * PA_PER_PSI).abs() < 1e-9);
        assert_eq!(a.bladder_count(), 6);
        assert_eq!(a.bus.latency_ns(10).unwrap(), 8_920_000);
    }

    #[test]
    fn front_row_is_flagged() {
        let a = default_assembly();
        assert_eq!(a.warnings.len(), 1, "{:?}", a.warnings);
        assert!(a.warnings[0].starts_with("front:"));
    }

    #[test]
    fn deterministic_loading() {
        assert_eq!(default_assembly(), default_assembly());
    }

    fn without_segments() -> String {
        let mut out = String::new();
        let mut skipping = false;
        for line in DEFAULT_MANIFEST.lines() {
            if line.starts_with('[') {
                skipping = line.starts_with("[[segment");
            }
            if !skipping {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    #[test]
    fn empty_segment_list_rejected() {
        match load_assembly(&without_segments()) {
            Err(Error::Invalid(errs)) => {
                assert!(errs.iter().any(|e| e.message.contains("at least one segment")))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_unit_names_its_line() {
        let doc = DEFAULT_MANIFEST.replacen("\"0.16 m\"", "\"0.16 furlongs\"", 1);
        let line = doc.lines().position(|l| l.contains("furlongs")).unwrap() + 1;
        match load_assembly(&doc) {
            Err(Error::Parse { line: l, message }) => {
                assert_eq!(l, line);
                assert!(message.contains("unknown unit"), "{message}");
                assert!(message.contains("bladder.major_diameter"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_suffix_rejected() {
        let doc = DEFAULT_MANIFEST.replacen("\"0.16 m\"", "\"0.16\"", 1);
        assert!(matches!(load_assembly(&doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn syntax_error_has_line() {
        let doc = format!("{DEFAULT_MANIFEST}\nbroken = = 3\n");
        let expected = doc.lines().count();
        match load_assembly(&doc) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, expected),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_violation_names_field() {
        let doc = DEFAULT_MANIFEST.replacen("bladders = 2", "bladders = 3", 1);
        match load_assembly(&doc) {
            Err(Error::Invalid(errs)) => assert_eq!(errs[0].field, "segment[1].bladder_slots"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unsafe_settle_pressure_rejected() {
        let doc = DEFAULT_MANIFEST.replacen("\"0.15 bar\"", "\"8 psi\"", 1);
        assert!(matches!(load_assembly(&doc), Err(Error::Invalid(_))));
    }
}
