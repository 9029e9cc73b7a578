//! Load-dependent backlash in the cable-driven U-joints.
//!
//! Each joint axis is a classical play operator: the output holds still
//! until the command leaves a band of total width `w` around it, then drags
//! along at the band edge. The width grows linearly with the load hung on
//! the joint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::units::KG_PER_LB;

/// Width model `w(load) = intercept + slope·load`, SI internally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisModel {
    pub width_intercept_rad: f64,
    pub width_slope_rad_per_kg: f64,
}

impl Default for HysteresisModel {
    fn default() -> Self {
        Self::from_degrees_per_lb(1.94, 0.354)
    }
}

impl HysteresisModel {
    pub fn from_degrees_per_lb(intercept_deg: f64, slope_deg_per_lb: f64) -> Self {
        Self {
            width_intercept_rad: intercept_deg.to_radians(),
            width_slope_rad_per_kg: slope_deg_per_lb.to_radians() / KG_PER_LB,
        }
    }

    pub fn width_rad(&self, load_kg: f64) -> f64 {
        (self.width_intercept_rad + self.width_slope_rad_per_kg * load_kg).max(0.0)
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if !(self.width_intercept_rad >= 0.0) {
            errors.push(FieldError::new("hysteresis.width_intercept", "must be non-negative"));
        }
        if !(self.width_slope_rad_per_kg >= 0.0) {
            errors.push(FieldError::new("hysteresis.width_slope", "must be non-negative"));
        }
        errors
    }
}

/// Output of one play operator. Starts unset and snaps to the first command.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayState {
    output_rad: Option<f64>,
}

impl PlayState {
    pub fn output_rad(&self) -> Option<f64> {
        self.output_rad
    }

    pub fn reset(&mut self) {
        self.output_rad = None;
    }
}

pub fn apply_hysteresis(
    commanded_rad: f64,
    load_kg: f64,
    model: &HysteresisModel,
    state: &mut PlayState,
) -> Result<f64> {
    if !(load_kg >= 0.0) {
        return Err(Error::arg("load", format!("{load_kg} kg must be non-negative")));
    }
    let half = 0.5 * model.width_rad(load_kg);
    let previous = state.output_rad.unwrap_or(commanded_rad);
    let output = previous.clamp(commanded_rad - half, commanded_rad + half);
    state.output_rad = Some(output);
    Ok(output)
}

/// Triangle sweep between ±amplitude, `cycles` full periods, starting at
/// zero and rising first. Returns `(command, actual)` pairs in radians.
pub fn hysteresis_sweep(
    model: &HysteresisModel,
    load_kg: f64,
    amplitude_rad: f64,
    cycles: usize,
    samples_per_cycle: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(amplitude_rad > 0.0) || samples_per_cycle < 4 || !samples_per_cycle.is_multiple_of(4) {
        return Err(Error::arg(
            "sweep",
            "amplitude must be positive and samples_per_cycle a positive multiple of 4",
        ));
    }
    let mut state = PlayState::default();
    let quarter = samples_per_cycle / 4;
    let total = cycles * samples_per_cycle;
    let mut out = Vec::with_capacity(total + 1);
    for k in 0..=total {
        let phase = k % samples_per_cycle;
        let frac = (phase % quarter) as f64 / quarter as f64;
        let command = amplitude_rad
            * match phase / quarter {
                0 => frac,
                1 => 1.0 - frac,
                2 => -frac,
                _ => -1.0 + frac,
            };
        let actual = apply_hysteresis(command, load_kg, model, &mut state)?;
        out.push((command, actual));
    }
    Ok(out)
}

fn crossing_at_zero(a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let (c0, y0) = a;
    let (c1, y1) = b;
    if c0 == c1 || (c0 > 0.0 && c1 > 0.0) || (c0 < 0.0 && c1 < 0.0) {
        return None;
    }
    let s = -c0 / (c1 - c0);
    Some(y0 + s * (y1 - y0))
}

/// Gap between the descending and ascending branches at zero command,
/// measured on the last complete cycle.
pub fn loop_width(sweep: &[(f64, f64)]) -> Option<f64> {
    let mut rising = None;
    let mut falling = None;
    for w in sweep.windows(2) {
        if let Some(y) = crossing_at_zero(w[0], w[1]) {
            if w[1].0 > w[0].0 {
                rising = Some(y);
            } else if w[1].0 < w[0].0 {
                falling = Some(y);
            }
        }
    }
    Some(falling? - rising?)
}

/// Area enclosed by the last full cycle of a sweep (shoelace).
pub fn loop_area(sweep: &[(f64, f64)], samples_per_cycle: usize) -> f64 {
    if sweep.len() <= samples_per_cycle {
        return 0.0;
    }
    let cycle = &sweep[sweep.len() - 1 - samples_per_cycle..];
    let twice: f64 = cycle
        .windows(2)
        .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
        .sum();
    0.5 * twice.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthFit {
    pub model: HysteresisModel,
    pub max_abs_residual_rad: f64,
}

/// Least-squares line through `(load_kg, width_rad)` observations.
pub fn fit_width_model(points: &[(f64, f64)]) -> Result<WidthFit> {
    if points.len() < 2 {
        return Err(Error::arg("points", "need at least two observations"));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("points", "loads must not all be equal"));
    }
    let slope = sxy / sxx;
    let model = HysteresisModel {
        width_intercept_rad: mean_y - slope * mean_x,
        width_slope_rad_per_kg: slope,
    };
    let max_abs_residual_rad = points
        .iter()
        .map(|&(x, y)| (model.width_rad(x) - y).abs())
        .fold(0.0, f64::max);
    Ok(WidthFit {
        model,
        max_abs_residual_rad,
    })
}
