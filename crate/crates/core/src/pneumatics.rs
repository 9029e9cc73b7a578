//! Bladder inflation through the regulated tube network.
//!
//! Each branch is a lumped plant: volumetric flow is the pressure
//! difference across a single effective resistance, and the bladder side
//! pressure rises linearly from zero at empty to the settle pressure at full.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::model::{Branch, RobotAssembly};
use crate::units::PA_PER_PSI;

pub const DEFAULT_AIR_DENSITY: f64 = 1.2;
/// Compressor output feeding both regulators.
pub const DEFAULT_SUPPLY_PA: f64 = 15.0 * PA_PER_PSI;
/// Simulated time after which a fill that has not completed is abandoned.
pub const DEFAULT_FILL_HORIZON_S: f64 = 600.0;
pub const DEFAULT_FILL_DEADLINE_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeRun {
    pub length_m: f64,
    pub inner_diameter_m: f64,
    pub darcy_friction_factor: f64,
    pub minor_loss_coefficients: Vec<f64>,
}

impl TubeRun {
    pub fn flow_area_m2(&self) -> f64 {
        0.25 * PI * self.inner_diameter_m * self.inner_diameter_m
    }

    fn validate(&self, path: &str) -> Vec<FieldError> {
        let mut errors = Vec::new();
        for (name, v) in [
            ("length", self.length_m),
            ("inner_diameter", self.inner_diameter_m),
            ("friction_factor", self.darcy_friction_factor),
        ] {
            if !(v > 0.0) {
                errors.push(FieldError::new(format!("{path}.{name}"), "must be positive"));
            }
        }
        if self.minor_loss_coefficients.iter().any(|k| !(*k >= 0.0)) {
            errors.push(FieldError::new(
                format!("{path}.minor_losses"),
                "coefficients must be non-negative",
            ));
        }
        errors
    }
}

/// Darcy–Weisbach head loss over one run, in metres of the flowing gas.
pub fn head_loss(tube: &TubeRun, mean_velocity_m_s: f64, g: f64) -> Result<f64> {
    if !(mean_velocity_m_s >= 0.0) {
        return Err(Error::arg("velocity", "must be non-negative"));
    }
    if !(g > 0.0) {
        return Err(Error::arg("gravity", "must be positive"));
    }
    let k: f64 = tube.minor_loss_coefficients.iter().sum();
    let resistance = tube.darcy_friction_factor * tube.length_m / tube.inner_diameter_m + k;
    Ok(resistance * mean_velocity_m_s * mean_velocity_m_s / (2.0 * g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub branch: Branch,
    pub runs: Vec<TubeRun>,
    /// Lumped flow resistance while filling, Pa·s/m³.
    pub fill_resistance: f64,
    /// Lumped resistance of the exhaust path, Pa·s/m³.
    pub vent_resistance: f64,
}

impl BranchSpec {
    /// Pressure drop along the branch tubing at a volumetric flow.
    pub fn tube_pressure_drop_pa(&self, flow_m3_s: f64, air_density: f64, g: f64) -> Result<f64> {
        let mut total = 0.0;
        for run in &self.runs {
            let v = flow_m3_s.abs() / run.flow_area_m2();
            total += air_density * g * head_loss(run, v, g)?;
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PneumaticNetwork {
    pub regulator_setpoint_pa: f64,
    pub supply_pa: f64,
    pub air_density_kg_m3: f64,
    pub branches: Vec<BranchSpec>,
}

impl PneumaticNetwork {
    /// Ideal regulator: holds its set point unless the supply is lower.
    pub fn delivered_pressure_pa(&self) -> f64 {
        self.regulator_setpoint_pa.min(self.supply_pa)
    }

    pub fn branch(&self, branch: Branch) -> Option<&BranchSpec> {
        self.branches.iter().find(|b| b.branch == branch)
    }

    pub fn branch_mut(&mut self, branch: Branch) -> Option<&mut BranchSpec> {
        self.branches.iter_mut().find(|b| b.branch == branch)
    }

    pub fn with_regulator(&self, setpoint_pa: f64) -> Self {
        Self {
            regulator_setpoint_pa: setpoint_pa,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if !(self.supply_pa > 0.0) {
            errors.push(FieldError::new("pneumatics.supply", "must be positive"));
        }
        if !(self.regulator_setpoint_pa >= 0.0 && self.regulator_setpoint_pa <= self.supply_pa) {
            errors.push(FieldError::new(
                "pneumatics.regulator",
                format!("must lie within 0..={:.0} Pa gauge", self.supply_pa),
            ));
        }
        if !(self.air_density_kg_m3 > 0.0) {
            errors.push(FieldError::new("pneumatics.air_density", "must be positive"));
        }
        for b in Branch::ALL {
            let n = self.branches.iter().filter(|s| s.branch == b).count();
            if n != 1 {
                errors.push(FieldError::new(
                    "pneumatics.branch",
                    format!("branch '{b}' must appear exactly once, found {n}"),
                ));
            }
        }
        for (i, spec) in self.branches.iter().enumerate() {
            let path = format!("pneumatics.branch[{i}]");
            if !(spec.fill_resistance > 0.0) {
                errors.push(FieldError::new(format!("{path}.fill_resistance"), "must be positive"));
            }
            if !(spec.vent_resistance > 0.0) {
                errors.push(FieldError::new(format!("{path}.vent_resistance"), "must be positive"));
            }
            for (j, run) in spec.runs.iter().enumerate() {
                errors.extend(run.validate(&format!("{path}.tube[{j}]")));
            }
        }
        errors
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValveState {
    #[default]
    Closed,
    Fill,
    Vent,
}

/// Everything needed to integrate one branch: regulator, resistances and
/// the bladders it feeds, lumped into a single volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPlant {
    pub upstream_pa: f64,
    pub fill_resistance: f64,
    pub vent_resistance: f64,
    pub full_volume_m3: f64,
    pub settle_pa: f64,
}

impl BranchPlant {
    pub fn for_branch(assembly: &RobotAssembly, branch: Branch) -> Result<Self> {
        Self::with_network(assembly, &assembly.pneumatics, branch)
    }

    pub fn with_network(assembly: &RobotAssembly, network: &PneumaticNetwork, branch: Branch) -> Result<Self> {
        let spec = network
            .branch(branch)
            .ok_or_else(|| Error::arg("branch", format!("network has no '{branch}' branch")))?;
        Ok(Self {
            upstream_pa: network.delivered_pressure_pa(),
            fill_resistance: spec.fill_resistance,
            vent_resistance: spec.vent_resistance,
            full_volume_m3: assembly.bladders_on(branch) as f64 * assembly.bladder.full_volume_m3(),
            settle_pa: assembly.bladder.settle_pressure_gauge_pa(),
        })
    }

    pub fn bladder_pressure_pa(&self, volume_m3: f64) -> f64 {
        if self.full_volume_m3 > 0.0 {
            self.settle_pa * volume_m3 / self.full_volume_m3
        } else {
            0.0
        }
    }

    pub fn fill_fraction(&self, volume_m3: f64) -> f64 {
        if self.full_volume_m3 > 0.0 {
            (volume_m3 / self.full_volume_m3).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    /// dV/dt for a valve position. Filling stops at full volume; venting
    /// stops at empty.
    pub fn flow_m3_s(&self, volume_m3: f64, valve: ValveState) -> f64 {
        let p = self.bladder_pressure_pa(volume_m3);
        match valve {
            ValveState::Closed => 0.0,
            ValveState::Fill => (self.upstream_pa - p) / self.fill_resistance,
            ValveState::Vent => -p / self.vent_resistance,
        }
    }

    /// One RK4 step, with the volume held inside `[0, full]`.
    pub fn advance(&self, volume_m3: f64, valve: ValveState, dt_s: f64) -> f64 {
        if valve == ValveState::Closed || self.full_volume_m3 <= 0.0 {
            return volume_m3;
        }
        let f = |v: f64| self.flow_m3_s(v, valve);
        let k1 = f(volume_m3);
        let k2 = f(volume_m3 + 0.5 * dt_s * k1);
        let k3 = f(volume_m3 + 0.5 * dt_s * k2);
        let k4 = f(volume_m3 + dt_s * k3);
        let next = volume_m3 + dt_s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        next.clamp(0.0, self.full_volume_m3)
    }

    /// Fill time constant `R·V_full/P_settle`; infinite with no compliance.
    pub fn fill_time_constant_s(&self) -> f64 {
        self.fill_resistance * self.full_volume_m3 / self.settle_pa
    }

    pub fn vent_time_constant_s(&self) -> f64 {
        self.vent_resistance * self.full_volume_m3 / self.settle_pa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FillSample {
    pub t_s: f64,
    pub volume_m3: f64,
    pub pressure_pa: f64,
    pub flow_m3_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillTrace {
    pub samples: Vec<FillSample>,
    pub full_volume_m3: f64,
    /// Time at which the bladders reached full volume, if they did.
    pub completion_s: Option<f64>,
}

impl FillTrace {
    pub fn empty(full_volume_m3: f64) -> Self {
        Self {
            samples: Vec::new(),
            full_volume_m3,
            completion_s: None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,volume_m3,pressure_pa,flow_m3_s\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{}", s.t_s, s.volume_m3, s.pressure_pa, s.flow_m3_s);
        }
        out
    }

    pub fn peak_flow_m3_s(&self) -> f64 {
        self.samples.iter().map(|s| s.flow_m3_s).fold(0.0, f64::max)
    }
}

fn sample(plant: &BranchPlant, t_s: f64, volume_m3: f64) -> FillSample {
    FillSample {
        t_s,
        volume_m3,
        pressure_pa: plant.bladder_pressure_pa(volume_m3),
        flow_m3_s: plant.flow_m3_s(volume_m3, ValveState::Fill).max(0.0),
    }
}

/// Integrates a fill from `initial_volume_m3` until the bladders are full
/// or `horizon_s` elapses.
pub fn simulate_fill_from(
    plant: &BranchPlant,
    initial_volume_m3: f64,
    valve: ValveState,
    dt_s: f64,
    horizon_s: f64,
) -> Result<FillTrace> {
    if !(dt_s > 0.0 && dt_s <= 1.0) {
        return Err(Error::arg("dt", format!("{dt_s} s must lie in (0, 1]")));
    }
    if valve != ValveState::Fill {
        return Ok(FillTrace::empty(plant.full_volume_m3));
    }
    let full = plant.full_volume_m3;
    let mut volume = initial_volume_m3.clamp(0.0, full);
    let mut samples = vec![sample(plant, 0.0, volume)];
    if volume >= full {
        return Ok(FillTrace {
            samples,
            full_volume_m3: full,
            completion_s: Some(0.0),
        });
    }
    // Equilibrium sits at or below full volume: the fill never completes.
    if plant.upstream_pa <= plant.settle_pa {
        let mut t = 0.0;
        let mut k = 0u64;
        while t < horizon_s {
            volume = plant.advance(volume, valve, dt_s);
            k += 1;
            t = k as f64 * dt_s;
            samples.push(sample(plant, t, volume));
        }
        return Ok(FillTrace {
            samples,
            full_volume_m3: full,
            completion_s: None,
        });
    }
    let mut k = 0u64;
    loop {
        let t0 = k as f64 * dt_s;
        let unclamped = {
            let f = |v: f64| plant.flow_m3_s(v, valve);
            let k1 = f(volume);
            let k2 = f(volume + 0.5 * dt_s * k1);
            let k3 = f(volume + 0.5 * dt_s * k2);
            let k4 = f(volume + dt_s * k3);
            volume + dt_s / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        };
        k += 1;
        let t1 = k as f64 * dt_s;
        if unclamped >= full {
            let s = (full - volume) / (unclamped - volume);
            let tc = t0 + s * dt_s;
            if tc > t0 {
                samples.push(sample(plant, tc, full));
            } else if let Some(last) = samples.last_mut() {
                *last = sample(plant, t0, full);
            }
            return Ok(FillTrace {
                samples,
                full_volume_m3: full,
                completion_s: Some(tc),
            });
        }
        volume = unclamped;
        samples.push(sample(plant, t1, volume));
        if t1 >= horizon_s {
            return Ok(FillTrace {
                samples,
                full_volume_m3: full,
                completion_s: None,
            });
        }
    }
}

/// Fill from empty with the valve open.
pub fn simulate_fill(plant: &BranchPlant, dt_s: f64) -> Result<FillTrace> {
    simulate_fill_from(plant, 0.0, ValveState::Fill, dt_s, DEFAULT_FILL_HORIZON_S)
}

pub fn fill_time(plant: &BranchPlant, dt_s: f64) -> Result<Option<f64>> {
    Ok(simulate_fill(plant, dt_s)?.completion_s)
}

pub fn inflation_error_vs_target(fill_time_s: f64, target_s: f64) -> Result<f64> {
    if !(target_s > 0.0) {
        return Err(Error::arg("target", "must be positive"));
    }
    Ok((fill_time_s - target_s) / target_s)
}

/// Smallest regulator setting with which every branch fills within
/// `deadline_s`.
pub fn min_upstream_pressure(
    assembly: &RobotAssembly,
    settle_pa: f64,
    deadline_s: f64,
    dt_s: f64,
) -> Result<f64> {
    if !(settle_pa >= 0.0) {
        return Err(Error::arg("settle", "must be non-negative"));
    }
    if !(deadline_s > 0.0) {
        return Err(Error::arg("deadline", "must be positive"));
    }
    let network = &assembly.pneumatics;
    let plants: Vec<BranchPlant> = Branch::ALL
        .iter()
        .map(|&b| {
            BranchPlant::with_network(assembly, network, b).map(|p| BranchPlant { settle_pa, ..p })
        })
        .collect::<Result<_>>()?;
    if deadline_s.is_infinite() {
        return Ok(settle_pa);
    }
    let horizon = deadline_s * 1.5 + 1.0;
    let meets = |upstream: f64| -> Result<bool> {
        for plant in &plants {
            let p = BranchPlant {
                upstream_pa: upstream,
                ..*plant
            };
            if p.full_volume_m3 <= 0.0 {
                continue;
            }
            match simulate_fill_from(&p, 0.0, ValveState::Fill, dt_s, horizon)?.completion_s {
                Some(t) if t <= deadline_s => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    };
    let mut hi = network.supply_pa;
    if !meets(hi)? {
        return Err(Error::Infeasible(format!(
            "no regulator setting up to {:.2} psi fills every branch within {deadline_s} s",
            hi / PA_PER_PSI
        )));
    }
    let mut lo = settle_pa;
    for _ in 0..200 {
        if hi - lo <= 1e-9 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if meets(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Fill resistance that makes `plant` complete in `target_s` at its
/// current upstream pressure. Fill time is proportional to resistance in
/// this model, so a fixed-point update on the simulated time converges in
/// a handful of steps.
pub fn calibrate_fill_resistance(plant: &BranchPlant, target_s: f64, dt_s: f64) -> Result<f64> {
    if !(target_s > 0.0) {
        return Err(Error::arg("target", "must be positive"));
    }
    if plant.upstream_pa <= plant.settle_pa {
        return Err(Error::Calibration(
            "upstream pressure must exceed the settle pressure".into(),
        ));
    }
    let mut p = *plant;
    for _ in 0..50 {
        let t = simulate_fill_from(&p, 0.0, ValveState::Fill, dt_s, 10.0 * target_s + 10.0)?
            .completion_s
            .ok_or_else(|| Error::Calibration("fill did not complete".into()))?;
        if (t - target_s).abs() <= 1e-9 * target_s {
            return Ok(p.fill_resistance);
        }
        p.fill_resistance *= target_s / t;
    }
    Err(Error::Calibration(format!(
        "fill resistance did not settle for target {target_s} s"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_assembly;
    use proptest::prelude::*;

    fn plant(upstream: f64, r: f64, v: f64, ps: f64) -> BranchPlant {
        BranchPlant {
            upstream_pa: upstream,
            fill_resistance: r,
            vent_resistance: r / 10.0,
            full_volume_m3: v,
            settle_pa: ps,
        }
    }

    /// Exponential approach of the linear plant, solved for the time at
    /// which volume reaches full.
    fn closed_form_fill_time(p: &BranchPlant) -> f64 {
        -p.fill_time_constant_s() * (1.0 - p.settle_pa / p.upstream_pa).ln()
    }

    #[test]
    fn head_loss_hand_value() {
        let tube = TubeRun {
            length_m: 2.0,
            inner_diameter_m: 0.002,
            darcy_friction_factor: 0.03,
            minor_loss_coefficients: vec![2.0, 3.0],
        };
        let h = head_loss(&tube, 3.0, 9.81).unwrap();
        assert!((h - 16.0550458715596).abs() < 1e-9, "{h}");
        assert_eq!(head_loss(&tube, 0.0, 9.81).unwrap(), 0.0);
        let h2 = head_loss(&tube, 6.0, 9.81).unwrap();
        assert!((h2 / h - 4.0).abs() < 1e-12);
        assert!(head_loss(&tube, -1.0, 9.81).is_err());
    }

    #[test]
    fn simulated_fill_matches_closed_form() {
        let p = plant(19_995.0, 1.7e8, 0.0043, 15_000.0);
        let t = fill_time(&p, 0.01).unwrap().unwrap();
        let oracle = closed_form_fill_time(&p);
        assert!((t - oracle).abs() / oracle < 1e-6, "{t} vs {oracle}");
    }

    #[test]
    fn shipped_calibration_fill_times() {
        let a = default_assembly();
        let rear = BranchPlant::for_branch(&a, Branch::Rear).unwrap();
        let front = BranchPlant::for_branch(&a, Branch::Front).unwrap();
        let tr = fill_time(&rear, 0.01).unwrap().unwrap();
        let tf = fill_time(&front, 0.01).unwrap().unwrap();
        assert!((tr - 68.0).abs() < 2.0, "rear {tr}");
        assert!((tf - 70.0).abs() < 2.0, "front {tf}");
    }

    #[test]
    fn inflation_error_examples() {
        assert!((inflation_error_vs_target(68.0, 60.0).unwrap() - 0.13333).abs() < 1e-4);
        assert_eq!(inflation_error_vs_target(60.0, 60.0).unwrap(), 0.0);
        assert!((inflation_error_vs_target(70.0, 60.0).unwrap() - 0.16667).abs() < 1e-4);
        assert!(inflation_error_vs_target(1.0, 0.0).is_err());
    }

    #[test]
    fn already_full_completes_immediately() {
        let p = plant(15_000.0, 1.7e8, 0.0043, 15_000.0);
        let trace = simulate_fill_from(&p, 0.0043, ValveState::Fill, 0.05, 100.0).unwrap();
        assert_eq!(trace.completion_s, Some(0.0));
        assert_eq!(trace.samples[0].flow_m3_s, 0.0);
    }

    #[test]
    fn closed_valve_gives_empty_trace() {
        let p = plant(19_995.0, 1.7e8, 0.0043, 15_000.0);
        let trace = simulate_fill_from(&p, 0.0, ValveState::Closed, 0.05, 100.0).unwrap();
        assert!(trace.samples.is_empty());
        assert!(simulate_fill(&p, 0.0).is_err());
        assert!(simulate_fill(&p, 1.5).is_err());
    }

    #[test]
    fn upstream_below_settle_never_completes() {
        let p = plant(10_000.0, 1.7e8, 0.0043, 15_000.0);
        let trace = simulate_fill_from(&p, 0.0, ValveState::Fill, 0.1, 50.0).unwrap();
        assert_eq!(trace.completion_s, None);
        assert!(trace.samples.last().unwrap().volume_m3 < p.full_volume_m3);
    }

    #[test]
    fn min_upstream_at_seventy_seconds() {
        let a = default_assembly();
        let settle = a.bladder.settle_pressure_gauge_pa();
        let p = min_upstream_pressure(&a, settle, 70.0, 0.01).unwrap();
        assert!((p / PA_PER_PSI - 2.9).abs() < 0.2, "{} psi", p / PA_PER_PSI);
        // closed form for the slower branch
        let front = BranchPlant::for_branch(&a, Branch::Front).unwrap();
        let oracle = settle / (1.0 - (-70.0 / front.fill_time_constant_s()).exp());
        assert!((p - oracle).abs() / oracle < 1e-4, "{p} vs {oracle}");
    }

    #[test]
    fn min_upstream_boundaries() {
        let a = default_assembly();
        assert_eq!(min_upstream_pressure(&a, 0.0, f64::INFINITY, 0.01).unwrap(), 0.0);
        let p = min_upstream_pressure(&a, 0.0, 60.0, 0.01).unwrap();
        assert!(p > 0.0);
        assert!(matches!(
            min_upstream_pressure(&a, 15_000.0, 0.1, 0.01),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn halving_dt_barely_moves_fill_time() {
        let a = default_assembly();
        let rear = BranchPlant::for_branch(&a, Branch::Rear).unwrap();
        let coarse = fill_time(&rear, 0.5).unwrap().unwrap();
        let fine = fill_time(&rear, 0.25).unwrap().unwrap();
        assert!((coarse - fine).abs() / fine < 0.005);
    }

    #[test]
    fn calibration_recovers_resistance() {
        let p = plant(19_995.0, 1.0e8, 0.0043, 15_000.0);
        let r = calibrate_fill_resistance(&p, 68.0, 0.01).unwrap();
        let calibrated = BranchPlant { fill_resistance: r, ..p };
        assert!((closed_form_fill_time(&calibrated) - 68.0).abs() < 1e-4);
    }

    #[test]
    fn vent_decays_exponentially() {
        let p = plant(19_995.0, 1.7e8, 0.0043, 15_000.0);
        let tau = p.vent_time_constant_s();
        let mut v = p.full_volume_m3;
        let dt = 0.01;
        let n = (tau / dt).round() as usize;
        for _ in 0..n {
            v = p.advance(v, ValveState::Vent, dt);
        }
        let expected = p.full_volume_m3 * (-(n as f64) * dt / tau).exp();
        assert!((v - expected).abs() / expected < 1e-8);
    }

    #[test]
    fn regulator_caps_at_supply() {
        let a = default_assembly();
        let n = a.pneumatics.with_regulator(30.0 * PA_PER_PSI);
        assert_eq!(n.delivered_pressure_pa(), n.supply_pa);
        assert!(!n.validate().is_empty());
    }

    proptest! {
        #[test]
        fn fill_time_monotone(
            up in 16_000.0f64..100_000.0,
            extra in 500.0f64..20_000.0,
            r in 5e7f64..5e8,
            v in 0.001f64..0.01,
            dv in 0.0001f64..0.005,
        ) {
            // keep the slowest variant inside the simulation horizon
            let slowest = -(r * (v + dv) / 15_000.0) * (1.0 - 15_000.0 / up).ln();
            prop_assume!(slowest < 0.9 * DEFAULT_FILL_HORIZON_S);
            let base = plant(up, r, v, 15_000.0);
            let t = fill_time(&base, 0.05).unwrap().unwrap();
            let faster = fill_time(&BranchPlant { upstream_pa: up + extra, ..base }, 0.05).unwrap().unwrap();
            let bigger = fill_time(&BranchPlant { full_volume_m3: v + dv, ..base }, 0.05).unwrap().unwrap();
            prop_assert!(faster < t);
            prop_assert!(bigger > t);
        }

        #[test]
        fn trace_is_monotone_and_bounded(up in 16_000.0f64..60_000.0, r in 5e7f64..3e8) {
            let p = plant(up, r, 0.0043, 15_000.0);
            let trace = simulate_fill(&p, 0.1).unwrap();
            for w in trace.samples.windows(2) {
                prop_assert!(w[1].t_s > w[0].t_s);
                prop_assert!(w[1].volume_m3 >= w[0].volume_m3);
            }
            prop_assert!(trace.samples.last().unwrap().pressure_pa <= up);
        }

        #[test]
        fn min_upstream_meets_its_deadline(deadline in 30.0f64..200.0) {
            let a = default_assembly();
            let settle = a.bladder.settle_pressure_gauge_pa();
            let p = min_upstream_pressure(&a, settle, deadline, 0.05).unwrap();
            let network = a.pneumatics.with_regulator(p);
            for b in Branch::ALL {
                let plant = BranchPlant::with_network(&a, &network, b).unwrap();
                let t = fill_time(&plant, 0.05).unwrap().unwrap();
                prop_assert!(t <= deadline + 1e-6);
            }
        }
    }
}
