//! Unit-suffixed scalar parsing.
//!
//! Every dimensional value that enters the toolkit is written as a number
//! followed by a unit suffix (`"6 psi"`, `"5.386 kg"`, `"0.73ms"`). It is
//! converted to SI exactly once, here. Everything downstream works in SI:
//! kg, m, s, N, Pa (gauge unless stated otherwise), rad, W.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Pascals per pound-force per square inch.
pub const PA_PER_PSI: f64 = 6894.757293168361;
/// Pascals per bar.
pub const PA_PER_BAR: f64 = 1.0e5;
/// Standard atmosphere, used only to turn absolute pressures into gauge.
pub const STANDARD_ATMOSPHERE_PA: f64 = 101_325.0;
/// Kilograms per avoirdupois pound.
pub const KG_PER_LB: f64 = 0.45359237;
/// Newtons per pound-force.
pub const N_PER_LBF: f64 = 4.4482216152605;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Mass,
    Volume,
    Pressure,
    Angle,
    Time,
    Force,
    Power,
    Torque,
    Density,
    Velocity,
    Acceleration,
    AngularVelocity,
    Frequency,
    FlowResistance,
    DragCoefficient,
    AnglePerMass,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Volume => "volume",
            Dimension::Pressure => "pressure",
            Dimension::Angle => "angle",
            Dimension::Time => "time",
            Dimension::Force => "force",
            Dimension::Power => "power",
            Dimension::Torque => "torque",
            Dimension::Density => "density",
            Dimension::Velocity => "velocity",
            Dimension::Acceleration => "acceleration",
            Dimension::AngularVelocity => "angular velocity",
            Dimension::Frequency => "frequency",
            Dimension::FlowResistance => "flow resistance",
            Dimension::DragCoefficient => "drag coefficient",
            Dimension::AnglePerMass => "angle per mass",
        };
        f.write_str(name)
    }
}

/// One supported suffix. `si = value * scale + offset`.
#[derive(Debug, Clone, Copy)]
pub struct Unit {
    pub suffix: &'static str,
    pub dimension: Dimension,
    pub scale: f64,
    pub offset: f64,
}

impl Unit {
    const fn linear(suffix: &'static str, dimension: Dimension, scale: f64) -> Self {
        Self {
            suffix,
            dimension,
            scale,
            offset: 0.0,
        }
    }

    pub fn to_si(&self, value: f64) -> f64 {
        value * self.scale + self.offset
    }

    pub fn from_si(&self, si: f64) -> f64 {
        (si - self.offset) / self.scale
    }
}

use Dimension as D;

/// The full conversion table. Suffixes are unique, so lookup is a bijection
/// between suffix and (dimension, scale, offset).
pub const UNITS: &[Unit] = &[
    Unit::linear("m", D::Length, 1.0),
    Unit::linear("cm", D::Length, 1.0e-2),
    Unit::linear("mm", D::Length, 1.0e-3),
    Unit::linear("km", D::Length, 1.0e3),
    Unit::linear("in", D::Length, 0.0254),
    Unit::linear("ft", D::Length, 0.3048),
    Unit::linear("kg", D::Mass, 1.0),
    Unit::linear("g", D::Mass, 1.0e-3),
    Unit::linear("lb", D::Mass, KG_PER_LB),
    Unit::linear("lbs", D::Mass, KG_PER_LB),
    Unit::linear("m3", D::Volume, 1.0),
    Unit::linear("m^3", D::Volume, 1.0),
    Unit::linear("L", D::Volume, 1.0e-3),
    Unit::linear("mL", D::Volume, 1.0e-6),
    Unit::linear("cm3", D::Volume, 1.0e-6),
    Unit::linear("Pa", D::Pressure, 1.0),
    Unit::linear("kPa", D::Pressure, 1.0e3),
    Unit::linear("MPa", D::Pressure, 1.0e6),
    Unit::linear("bar", D::Pressure, PA_PER_BAR),
    Unit::linear("mbar", D::Pressure, 1.0e2),
    Unit::linear("psi", D::Pressure, PA_PER_PSI),
    Unit::linear("psig", D::Pressure, PA_PER_PSI),
    Unit {
        suffix: "psia",
        dimension: D::Pressure,
        scale: PA_PER_PSI,
        offset: -STANDARD_ATMOSPHERE_PA,
    },
    Unit::linear("rad", D::Angle, 1.0),
    Unit::linear("deg", D::Angle, std::f64::consts::PI / 180.0),
    Unit::linear("s", D::Time, 1.0),
    Unit::linear("ms", D::Time, 1.0e-3),
    Unit::linear("us", D::Time, 1.0e-6),
    Unit::linear("min", D::Time, 60.0),
    Unit::linear("N", D::Force, 1.0),
    Unit::linear("kN", D::Force, 1.0e3),
    Unit::linear("lbf", D::Force, N_PER_LBF),
    Unit::linear("W", D::Power, 1.0),
    Unit::linear("kW", D::Power, 1.0e3),
    Unit::linear("Nm", D::Torque, 1.0),
    Unit::linear("N m", D::Torque, 1.0),
    Unit::linear("kg/m3", D::Density, 1.0),
    Unit::linear("m/s", D::Velocity, 1.0),
    Unit::linear("m/s2", D::Acceleration, 1.0),
    Unit::linear("m/s^2", D::Acceleration, 1.0),
    Unit::linear("rad/s", D::AngularVelocity, 1.0),
    Unit::linear("deg/s", D::AngularVelocity, std::f64::consts::PI / 180.0),
    Unit::linear("rpm", D::AngularVelocity, std::f64::consts::PI / 30.0),
    Unit::linear("Hz", D::Frequency, 1.0),
    Unit::linear("Pa s/m3", D::FlowResistance, 1.0),
    Unit::linear("N s2/m2", D::DragCoefficient, 1.0),
    Unit::linear("kg/m", D::DragCoefficient, 1.0),
    Unit::linear("rad/kg", D::AnglePerMass, 1.0),
    Unit::linear("deg/lb", D::AnglePerMass, std::f64::consts::PI / 180.0 / KG_PER_LB),
];

pub fn lookup(suffix: &str) -> Option<&'static Unit> {
    UNITS.iter().find(|u| u.suffix == suffix)
}

fn quantity_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(.*?)\s*$")
            .expect("static regex")
    })
}

/// Splits `"6 psi"` into `(6.0, "psi")`. The suffix may be empty.
pub fn split_quantity(text: &str) -> Result<(f64, &str)> {
    let caps = quantity_pattern()
        .captures(text)
        .ok_or_else(|| Error::Quantity {
            text: text.to_string(),
            reason: "expected a number followed by a unit suffix".into(),
        })?;
    let number = caps.get(1).map(|m| m.as_str()).unwrap_or_default();
    let value: f64 = number.parse().map_err(|_| Error::Quantity {
        text: text.to_string(),
        reason: format!("'{number}' is not a number"),
    })?;
    let suffix = caps.get(2).map(|m| m.as_str()).unwrap_or_default();
    Ok((value, suffix))
}

/// Parses a unit-suffixed scalar of the expected dimension into SI.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64> {
    let (value, suffix) = split_quantity(text)?;
    if suffix.is_empty() {
        return Err(Error::Quantity {
            text: text.to_string(),
            reason: format!("missing unit suffix (expected a {expected})"),
        });
    }
    let unit = lookup(suffix).ok_or_else(|| Error::UnknownUnit {
        suffix: suffix.to_string(),
    })?;
    if unit.dimension != expected {
        return Err(Error::Quantity {
            text: text.to_string(),
            reason: format!("'{suffix}' is a {} unit, expected a {expected}", unit.dimension),
        });
    }
    Ok(unit.to_si(value))
}

/// Converts an SI value into the given suffix.
pub fn convert_from_si(si: f64, suffix: &str) -> Result<f64> {
    let unit = lookup(suffix).ok_or_else(|| Error::UnknownUnit {
        suffix: suffix.to_string(),
    })?;
    Ok(unit.from_si(si))
}

pub fn psi_to_pa(psi: f64) -> f64 {
    psi * PA_PER_PSI
}

pub fn pa_to_psi(pa: f64) -> f64 {
    pa / PA_PER_PSI
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn six_psi_is_gauge_pascals() {
        let pa = parse_quantity("6 psi", Dimension::Pressure).unwrap();
        assert!((pa - 6.0 * 6894.76).abs() < 0.1);
        assert!((pa - 41368.5).abs() < 0.1);
    }

    #[test]
    fn suffix_without_space() {
        let pa = parse_quantity("2.9psi", Dimension::Pressure).unwrap();
        assert!((pa - 2.9 * PA_PER_PSI).abs() < 1e-9);
        let s = parse_quantity("0.1ms", Dimension::Time).unwrap();
        assert!((s - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn absolute_pressure_becomes_gauge() {
        let pa = parse_quantity("14.7 psia", Dimension::Pressure).unwrap();
        assert!(pa.abs() < 100.0);
    }

    #[test]
    fn unknown_suffix_rejected() {
        let err = parse_quantity("3 furlongs", Dimension::Length).unwrap_err();
        assert!(matches!(err, Error::UnknownUnit { ref suffix } if suffix == "furlongs"));
    }

    #[test]
    fn missing_suffix_rejected() {
        assert!(parse_quantity("3", Dimension::Length).is_err());
    }

    #[test]
    fn wrong_dimension_rejected() {
        let err = parse_quantity("3 kg", Dimension::Length).unwrap_err();
        assert!(err.to_string().contains("mass"));
    }

    #[test]
    fn suffixes_are_unique() {
        for (i, a) in UNITS.iter().enumerate() {
            for b in &UNITS[i + 1..] {
                assert_ne!(a.suffix, b.suffix);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_every_unit(idx in 0usize..UNITS.len(), magnitude in -1.0e6f64..1.0e6) {
            let unit = &UNITS[idx];
            let text = format!("{magnitude:e} {}", unit.suffix);
            let si = parse_quantity(&text, unit.dimension).unwrap();
            let back = convert_from_si(si, unit.suffix).unwrap();
            let tol = 1e-9 * magnitude.abs().max(1e-300) + 1e-9 * unit.offset.abs() / unit.scale;
            prop_assert!((back - magnitude).abs() <= tol, "{} -> {} -> {}", magnitude, si, back);
        }
    }
}
