//! Derivation of the shipped pneumatic and hydrodynamic constants.
//!
//! Fill resistances are set so each branch completes its fill in the
//! measured time at the measured regulator pressure. Vent resistances give
//! a chosen exhaust time constant. Drag and added mass are then fitted so
//! the shipped descent and ascent scenarios reproduce the measured mean
//! accelerations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Branch, RobotAssembly};
use crate::pneumatics::{calibrate_fill_resistance, BranchPlant};
use crate::sim::{run_scenario, Scenario};
use crate::units::PA_PER_PSI;
use crate::vertical::TraverseSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTargets {
    pub fill_upstream_pa: f64,
    pub front_fill_s: f64,
    pub rear_fill_s: f64,
    pub vent_time_constant_s: f64,
    pub descent_acceleration_m_s2: f64,
    pub ascent_acceleration_m_s2: f64,
    pub dt_s: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            fill_upstream_pa: 2.9 * PA_PER_PSI,
            front_fill_s: 70.0,
            rear_fill_s: 68.0,
            vent_time_constant_s: 3.0,
            descent_acceleration_m_s2: 0.045,
            ascent_acceleration_m_s2: 0.027,
            dt_s: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub front_fill_resistance: f64,
    pub rear_fill_resistance: f64,
    pub front_vent_resistance: f64,
    pub rear_vent_resistance: f64,
    pub drag_coefficient: f64,
    pub added_mass_kg: f64,
    pub descent: TraverseSummary,
    pub ascent: TraverseSummary,
    pub iterations: usize,
}

/// Sets fill and vent resistances on a copy of the assembly.
pub fn calibrate_pneumatics(assembly: &RobotAssembly, targets: &CalibrationTargets) -> Result<RobotAssembly> {
    let mut out = assembly.clone();
    let network = assembly.pneumatics.with_regulator(targets.fill_upstream_pa);
    for (branch, target) in [(Branch::Front, targets.front_fill_s), (Branch::Rear, targets.rear_fill_s)] {
        let plant = BranchPlant::with_network(assembly, &network, branch)?;
        let fill = calibrate_fill_resistance(&plant, target, targets.dt_s)?;
        let vent = targets.vent_time_constant_s * plant.settle_pa / plant.full_volume_m3;
        let spec = out
            .pneumatics
            .branch_mut(branch)
            .ok_or_else(|| Error::Calibration(format!("no '{branch}' branch")))?;
        spec.fill_resistance = fill;
        spec.vent_resistance = vent;
    }
    Ok(out)
}

/// Descent and ascent summaries of the shipped scenarios.
pub fn traverse_accelerations(assembly: &RobotAssembly, dt_s: f64) -> Result<(TraverseSummary, TraverseSummary)> {
    let summary = |scenario: &Scenario| -> Result<TraverseSummary> {
        let run = run_scenario(assembly, scenario, dt_s)?;
        run.summary().copied().ok_or_else(|| {
            Error::Calibration(format!("scenario '{}' did not complete: {:?}", scenario.name, run.outcome))
        })
    };
    Ok((summary(&Scenario::descent())?, summary(&Scenario::ascent())?))
}

/// Newton iteration on `(ln c, ln m_a)` with a forward-difference Jacobian.
pub fn fit_hydro(assembly: &RobotAssembly, targets: &CalibrationTargets) -> Result<(RobotAssembly, usize)> {
    let mut a = assembly.clone();
    let mut x = [
        a.hydro.drag_coefficient.max(1.0).ln(),
        a.hydro.added_mass_kg.max(1.0).ln(),
    ];
    let residual = |a: &mut RobotAssembly, x: [f64; 2]| -> Result<[f64; 2]> {
        a.hydro.drag_coefficient = x[0].exp();
        a.hydro.added_mass_kg = x[1].exp();
        let (d, u) = traverse_accelerations(a, targets.dt_s)?;
        Ok([
            d.mean_acceleration_m_s2 / targets.descent_acceleration_m_s2 - 1.0,
            u.mean_acceleration_m_s2 / targets.ascent_acceleration_m_s2 - 1.0,
        ])
    };
    let h = 1e-4;
    for iteration in 1..=40 {
        let r = residual(&mut a, x)?;
        if r[0].abs() < 1e-6 && r[1].abs() < 1e-6 {
            residual(&mut a, x)?;
            return Ok((a, iteration));
        }
        let r0 = residual(&mut a, [x[0] + h, x[1]])?;
        let r1 = residual(&mut a, [x[0], x[1] + h])?;
        let j = [
            [(r0[0] - r[0]) / h, (r1[0] - r[0]) / h],
            [(r0[1] - r[1]) / h, (r1[1] - r[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-12 {
            return Err(Error::Calibration("singular Jacobian in hydro fit".into()));
        }
        let dx0 = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dx1 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        // Damp large steps; the residual is strongly nonlinear far out.
        let scale = (1.0 / dx0.abs().max(dx1.abs())).min(1.0);
        x = [x[0] - scale * dx0, x[1] - scale * dx1];
    }
    Err(Error::Calibration("hydro fit did not converge in 40 iterations".into()))
}

pub fn calibrate(assembly: &RobotAssembly, targets: &CalibrationTargets) -> Result<CalibrationReport> {
    let pneumatic = calibrate_pneumatics(assembly, targets)?;
    let (fitted, iterations) = fit_hydro(&pneumatic, targets)?;
    let (descent, ascent) = traverse_accelerations(&fitted, targets.dt_s)?;
    let branch = |b: Branch| fitted.pneumatics.branch(b).expect("validated network");
    Ok(CalibrationReport {
        front_fill_resistance: branch(Branch::Front).fill_resistance,
        rear_fill_resistance: branch(Branch::Rear).fill_resistance,
        front_vent_resistance: branch(Branch::Front).vent_resistance,
        rear_vent_resistance: branch(Branch::Rear).vent_resistance,
        drag_coefficient: fitted.hydro.drag_coefficient,
        added_mass_kg: fitted.hydro.added_mass_kg,
        descent,
        ascent,
        iterations,
    })
}
