//! Whole-body sinking and rising, driven by bladder fill.
//!
//! Depth and velocity are positive downward. The body is a point mass with
//! added mass and quadratic drag; net buoyancy comes from the hydrostatic
//! budget at the current branch fill fractions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::hydrostatics::assembly_net_force;
use crate::model::RobotAssembly;
use crate::pneumatics::FillTrace;

pub const DEFAULT_TANK_DEPTH_M: f64 = 1.5;
pub const MAX_STEP_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroParams {
    /// Coefficient `c` in `F_drag = c·v·|v|`, N·s²/m².
    pub drag_coefficient: f64,
    pub added_mass_kg: f64,
    pub tank_depth_m: f64,
    /// Summary window as fractions of the traverse, measured from the start.
    pub window_start_fraction: f64,
    pub window_end_fraction: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            drag_coefficient: 0.0,
            added_mass_kg: 0.0,
            tank_depth_m: DEFAULT_TANK_DEPTH_M,
            window_start_fraction: 0.25,
            window_end_fraction: 0.75,
        }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if !(self.drag_coefficient >= 0.0) {
            errors.push(FieldError::new("hydro.drag_coefficient", "must be non-negative"));
        }
        if !(self.added_mass_kg >= 0.0) {
            errors.push(FieldError::new("hydro.added_mass", "must be non-negative"));
        }
        if !(self.tank_depth_m > 0.0) {
            errors.push(FieldError::new("hydro.tank_depth", "must be positive"));
        }
        if !(0.0 <= self.window_start_fraction
            && self.window_start_fraction < self.window_end_fraction
            && self.window_end_fraction <= 1.0)
        {
            errors.push(FieldError::new(
                "hydro.window",
                "need 0 <= start < end <= 1",
            ));
        }
        errors
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerticalState {
    pub t_s: f64,
    pub depth_m: f64,
    pub velocity_m_s: f64,
    pub acceleration_m_s2: f64,
}

impl VerticalState {
    pub fn at_depth(depth_m: f64) -> Self {
        Self {
            depth_m,
            ..Self::default()
        }
    }
}

/// Net upward force as an affine function of the two branch fills.
/// Bladder displacement is linear in fill, so three evaluations of the
/// full budget pin it down exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuoyancyModel {
    pub mass_kg: f64,
    pub deflated_force_n: f64,
    pub front_full_force_n: f64,
    pub rear_full_force_n: f64,
}

impl BuoyancyModel {
    pub fn from_assembly(assembly: &RobotAssembly) -> Result<Self> {
        let base = assembly_net_force(assembly, 0.0, 0.0)?;
        Ok(Self {
            mass_kg: assembly.total_mass_kg(),
            deflated_force_n: base,
            front_full_force_n: assembly_net_force(assembly, 1.0, 0.0)? - base,
            rear_full_force_n: assembly_net_force(assembly, 0.0, 1.0)? - base,
        })
    }

    /// Net upward force; negative means the robot sinks.
    pub fn net_upward_force_n(&self, fill_front: f64, fill_rear: f64) -> f64 {
        self.deflated_force_n + fill_front * self.front_full_force_n + fill_rear * self.rear_full_force_n
    }

    /// Common fill fraction at which the robot is neutrally buoyant.
    pub fn neutral_fill(&self) -> f64 {
        -self.deflated_force_n / (self.front_full_force_n + self.rear_full_force_n)
    }
}

pub fn terminal_speed(net_force_n: f64, drag_coefficient: f64) -> f64 {
    (net_force_n.abs() / drag_coefficient).sqrt()
}

/// Advances one step with fill fractions held at their start-of-step values.
///
/// Velocity is updated first with the drag linearised about the current
/// speed and treated implicitly, then depth uses the new velocity. The tank
/// surface and floor are hard stops.
pub fn step(
    model: &BuoyancyModel,
    hydro: &HydroParams,
    fill: (f64, f64),
    state: &VerticalState,
    dt_s: f64,
) -> Result<VerticalState> {
    if !(dt_s > 0.0 && dt_s <= MAX_STEP_S) {
        return Err(Error::arg("dt", format!("{dt_s} s must lie in (0, {MAX_STEP_S}]")));
    }
    let inertia = model.mass_kg + hydro.added_mass_kg;
    let drive = -model.net_upward_force_n(fill.0, fill.1) / inertia;
    let damping = hydro.drag_coefficient * state.velocity_m_s.abs() / inertia;
    let mut velocity = (state.velocity_m_s + dt_s * drive) / (1.0 + dt_s * damping);
    let mut depth = state.depth_m + dt_s * velocity;
    if depth <= 0.0 {
        depth = 0.0;
        velocity = velocity.max(0.0);
    } else if depth >= hydro.tank_depth_m {
        depth = hydro.tank_depth_m;
        velocity = velocity.min(0.0);
    }
    Ok(VerticalState {
        t_s: state.t_s + dt_s,
        depth_m: depth,
        velocity_m_s: velocity,
        acceleration_m_s2: (velocity - state.velocity_m_s) / dt_s,
    })
}

/// Piecewise-linear fill fraction over time, flat outside its samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FillProfile {
    points: Vec<(f64, f64)>,
}

impl FillProfile {
    pub fn constant(fraction: f64) -> Self {
        Self {
            points: vec![(0.0, fraction)],
        }
    }

    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::arg("profile", "times must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// Shifts the whole profile later in time.
    pub fn delayed(mut self, by_s: f64) -> Self {
        for p in &mut self.points {
            p.0 += by_s;
        }
        self
    }

    pub fn at(&self, t_s: f64) -> f64 {
        let pts = &self.points;
        match pts.len() {
            0 => 0.0,
            _ if t_s <= pts[0].0 => pts[0].1,
            _ if t_s >= pts[pts.len() - 1].0 => pts[pts.len() - 1].1,
            _ => {
                let i = pts.partition_point(|p| p.0 <= t_s);
                let (t0, f0) = pts[i - 1];
                let (t1, f1) = pts[i];
                f0 + (f1 - f0) * (t_s - t0) / (t1 - t0)
            }
        }
    }
}

/// Turns a branch fill trace into the fill fraction every bladder on that
/// branch sees over time.
pub fn couple_fill_to_buoyancy(trace: &FillTrace) -> Result<FillProfile> {
    if trace.samples.is_empty() || !(trace.full_volume_m3 > 0.0) {
        return Ok(FillProfile::default());
    }
    FillProfile::from_points(
        trace
            .samples
            .iter()
            .map(|s| (s.t_s, (s.volume_m3 / trace.full_volume_m3).clamp(0.0, 1.0)))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traverse {
    /// Surface to floor.
    Descent,
    /// Floor to surface.
    Ascent,
}

impl Traverse {
    fn start_depth(self, tank: f64) -> f64 {
        match self {
            Traverse::Descent => 0.0,
            Traverse::Ascent => tank,
        }
    }

    fn end_depth(self, tank: f64) -> f64 {
        match self {
            Traverse::Descent => tank,
            Traverse::Ascent => 0.0,
        }
    }

    /// +1 when travel is downward.
    fn sign(self) -> f64 {
        match self {
            Traverse::Descent => 1.0,
            Traverse::Ascent => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerticalSample {
    pub t_s: f64,
    pub depth_m: f64,
    pub velocity_m_s: f64,
    pub acceleration_m_s2: f64,
    pub fill_front: f64,
    pub fill_rear: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraverseSummary {
    /// From the start of the run to contact with the far boundary.
    pub duration_s: f64,
    /// First time the body leaves its starting boundary.
    pub onset_s: f64,
    /// Δv/Δt across the summary window, positive when speeding up in the
    /// direction of travel.
    pub mean_acceleration_m_s2: f64,
    pub window_s: (f64, f64),
    pub peak_speed_m_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TraverseOutcome {
    Completed(TraverseSummary),
    NonTerminating { horizon_s: f64, diagnosis: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerticalRun {
    pub samples: Vec<VerticalSample>,
    pub outcome: TraverseOutcome,
}

impl VerticalRun {
    pub fn summary(&self) -> Option<&TraverseSummary> {
        match &self.outcome {
            TraverseOutcome::Completed(s) => Some(s),
            TraverseOutcome::NonTerminating { .. } => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,depth_m,velocity_m_s,acceleration_m_s2,fill_front,fill_rear\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t_s, s.depth_m, s.velocity_m_s, s.acceleration_m_s2, s.fill_front, s.fill_rear
            );
        }
        out
    }
}

/// Time and velocity at which depth first crosses `target`, interpolated
/// between samples.
fn crossing(samples: &[VerticalSample], target: f64, sign: f64) -> Option<(f64, f64)> {
    samples.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let da = sign * (a.depth_m - target);
        let db = sign * (b.depth_m - target);
        if da < 0.0 && db >= 0.0 {
            let s = da / (da - db);
            Some((
                a.t_s + s * (b.t_s - a.t_s),
                a.velocity_m_s + s * (b.velocity_m_s - a.velocity_m_s),
            ))
        } else {
            None
        }
    })
}

pub fn summarize(samples: &[VerticalSample], hydro: &HydroParams, direction: Traverse) -> Option<TraverseSummary> {
    let tank = hydro.tank_depth_m;
    let start = direction.start_depth(tank);
    let end = direction.end_depth(tank);
    let sign = direction.sign();
    let last = samples.last()?;
    if last.depth_m != end {
        return None;
    }
    let duration_s = samples.iter().find(|s| s.depth_m == end)?.t_s;
    let onset_s = samples
        .iter()
        .take_while(|s| s.depth_m == start)
        .last()
        .map_or(samples[0].t_s, |s| s.t_s);
    let at = |frac: f64| start + sign * frac * tank;
    let (ta, va) = crossing(samples, at(hydro.window_start_fraction), sign)?;
    let (tb, vb) = crossing(samples, at(hydro.window_end_fraction), sign)?;
    Some(TraverseSummary {
        duration_s,
        onset_s,
        mean_acceleration_m_s2: sign * (vb - va) / (tb - ta),
        window_s: (ta, tb),
        peak_speed_m_s: samples.iter().map(|s| s.velocity_m_s.abs()).fold(0.0, f64::max),
    })
}

/// Why a traverse stalled, given the net upward force at the horizon.
pub fn diagnose_non_terminating(force_up_n: f64, direction: Traverse, horizon_s: f64) -> String {
    match direction {
        Traverse::Descent if force_up_n >= 0.0 => {
            format!("net force is non-negative ({force_up_n:+.3} N up); the robot cannot sink")
        }
        Traverse::Ascent if force_up_n <= 0.0 => {
            format!("net force is non-positive ({force_up_n:+.3} N up); the robot cannot rise")
        }
        _ => format!("boundary not reached within {horizon_s} s (net force {force_up_n:+.3} N up)"),
    }
}

/// Runs from the starting boundary until the far one is reached or the
/// horizon passes. `fills` is called once per step with the step's start
/// time and must return the `(front, rear)` fill fractions to hold over it.
pub fn simulate_traverse(
    model: &BuoyancyModel,
    hydro: &HydroParams,
    direction: Traverse,
    dt_s: f64,
    horizon_s: f64,
    mut fills: impl FnMut(f64) -> (f64, f64),
) -> Result<VerticalRun> {
    let tank = hydro.tank_depth_m;
    let end = direction.end_depth(tank);
    let mut state = VerticalState::at_depth(direction.start_depth(tank));
    let mut samples = Vec::new();
    let mut k = 0u64;
    let mut fill = fills(0.0);
    loop {
        samples.push(VerticalSample {
            t_s: state.t_s,
            depth_m: state.depth_m,
            velocity_m_s: state.velocity_m_s,
            acceleration_m_s2: state.acceleration_m_s2,
            fill_front: fill.0,
            fill_rear: fill.1,
        });
        if k > 0 && state.depth_m == end {
            break;
        }
        if state.t_s >= horizon_s {
            let force = model.net_upward_force_n(fill.0, fill.1);
            let diagnosis = diagnose_non_terminating(force, direction, horizon_s);
            return Ok(VerticalRun {
                samples,
                outcome: TraverseOutcome::NonTerminating { horizon_s, diagnosis },
            });
        }
        state = step(model, hydro, fill, &state, dt_s)?;
        k += 1;
        state.t_s = k as f64 * dt_s;
        fill = fills(state.t_s);
    }
    let outcome = match summarize(&samples, hydro, direction) {
        Some(s) => TraverseOutcome::Completed(s),
        None => TraverseOutcome::NonTerminating {
            horizon_s,
            diagnosis: "traverse too short to cover the summary window".into(),
        },
    };
    Ok(VerticalRun { samples, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_assembly;
    use proptest::prelude::*;

    fn constant_force(force_up: f64, mass: f64) -> BuoyancyModel {
        BuoyancyModel {
            mass_kg: mass,
            deflated_force_n: force_up,
            front_full_force_n: 0.0,
            rear_full_force_n: 0.0,
        }
    }

    fn deep_tank() -> HydroParams {
        HydroParams {
            tank_depth_m: 1.0e6,
            ..HydroParams::default()
        }
    }

    #[test]
    fn zero_drag_matches_constant_acceleration() {
        let m = constant_force(-20.0, 10.0);
        let hydro = deep_tank();
        let mut s = VerticalState::default();
        let dt = 0.01;
        for _ in 0..800 {
            s = step(&m, &hydro, (0.0, 0.0), &s, dt).unwrap();
            assert!((s.acceleration_m_s2 - 2.0).abs() < 1e-9);
        }
        let oracle = 0.5 * 2.0 * s.t_s * s.t_s;
        assert!((s.depth_m - oracle).abs() / oracle < 0.005);
    }

    #[test]
    fn linear_model_matches_budget() {
        let a = default_assembly();
        let m = BuoyancyModel::from_assembly(&a).unwrap();
        for (f, r) in [(0.0, 0.0), (0.3, 0.9), (1.0, 1.0), (0.5, 0.1)] {
            let direct = assembly_net_force(&a, f, r).unwrap();
            assert!((m.net_upward_force_n(f, r) - direct).abs() < 1e-9);
        }
        assert!((m.mass_kg - a.total_mass_kg()).abs() < 1e-12);
    }

    #[test]
    fn bad_dt_rejected() {
        let m = constant_force(-1.0, 1.0);
        let s = VerticalState::default();
        assert!(step(&m, &deep_tank(), (0.0, 0.0), &s, 0.0).is_err());
        assert!(step(&m, &deep_tank(), (0.0, 0.0), &s, 0.2).is_err());
    }

    #[test]
    fn boundaries_clamp() {
        let hydro = HydroParams::default();
        let floating = constant_force(5.0, 10.0);
        let s = step(&floating, &hydro, (0.0, 0.0), &VerticalState::default(), 0.05).unwrap();
        assert_eq!((s.depth_m, s.velocity_m_s), (0.0, 0.0));
        let sinking = constant_force(-5.0, 10.0);
        let s = step(&sinking, &hydro, (0.0, 0.0), &VerticalState::at_depth(1.5), 0.05).unwrap();
        assert_eq!((s.depth_m, s.velocity_m_s), (1.5, 0.0));
    }

    #[test]
    fn constant_descent_summary() {
        let m = constant_force(-0.045 * 10.0, 10.0);
        let run = simulate_traverse(&m, &HydroParams::default(), Traverse::Descent, 0.001, 60.0, |_| (0.0, 0.0)).unwrap();
        let s = run.summary().unwrap();
        assert!((s.duration_s - (2.0 * 1.5 / 0.045f64).sqrt()).abs() < 0.01, "{}", s.duration_s);
        assert!((s.mean_acceleration_m_s2 - 0.045).abs() < 1e-6);
    }

    #[test]
    fn buoyant_body_does_not_sink() {
        let m = constant_force(3.0, 10.0);
        let run = simulate_traverse(&m, &HydroParams::default(), Traverse::Descent, 0.01, 5.0, |_| (0.0, 0.0)).unwrap();
        match run.outcome {
            TraverseOutcome::NonTerminating { diagnosis, .. } => assert!(diagnosis.contains("cannot sink")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_interpolates_and_holds() {
        let p = FillProfile::from_points(vec![(1.0, 0.0), (3.0, 1.0)]).unwrap();
        assert_eq!(p.at(0.0), 0.0);
        assert_eq!(p.at(2.0), 0.5);
        assert_eq!(p.at(9.0), 1.0);
        assert_eq!(FillProfile::default().at(4.0), 0.0);
        assert_eq!(p.clone().delayed(2.0).at(4.0), 0.5);
        assert!(FillProfile::from_points(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn empty_trace_couples_to_zero() {
        let p = couple_fill_to_buoyancy(&FillTrace::empty(0.004)).unwrap();
        assert_eq!(p.at(10.0), 0.0);
    }

    proptest! {
        #[test]
        fn terminal_speed_never_exceeded(force in -80.0f64..-0.5, drag in 10.0f64..500.0, mass in 5.0f64..800.0) {
            let m = constant_force(force, mass);
            let hydro = HydroParams { drag_coefficient: drag, ..deep_tank() };
            let vt = terminal_speed(force, drag);
            let mut s = VerticalState::default();
            for _ in 0..3000 {
                let next = step(&m, &hydro, (0.0, 0.0), &s, 0.01).unwrap();
                prop_assert!(next.velocity_m_s >= s.velocity_m_s * (1.0 - 1e-12));
                prop_assert!(next.velocity_m_s <= vt * (1.0 + 1e-12));
                s = next;
            }
        }

        #[test]
        fn motion_follows_force_sign(force in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0]) {
            let m = constant_force(force, 20.0);
            let hydro = HydroParams { drag_coefficient: 50.0, ..deep_tank() };
            let start = VerticalState::at_depth(100.0);
            let s = step(&m, &hydro, (0.0, 0.0), &start, 0.01).unwrap();
            prop_assert_eq!(s.velocity_m_s.signum(), -force.signum());
        }

        #[test]
        fn halving_dt_keeps_final_depth(force in -60.0f64..-5.0, drag in 10.0f64..400.0) {
            let m = constant_force(force, 25.0);
            let hydro = HydroParams { drag_coefficient: drag, added_mass_kg: 100.0, ..deep_tank() };
            let run = |dt: f64| {
                let mut s = VerticalState::default();
                for _ in 0..(10.0 / dt).round() as usize {
                    s = step(&m, &hydro, (0.0, 0.0), &s, dt).unwrap();
                }
                s.depth_m
            };
            let coarse = run(0.01);
            let fine = run(0.005);
            prop_assert!((coarse - fine).abs() / fine < 0.005);
        }

        #[test]
        fn window_mean_is_velocity_change(force in -40.0f64..-5.0, drag in 0.0f64..200.0) {
            let m = constant_force(force, 25.0);
            let hydro = HydroParams { drag_coefficient: drag, added_mass_kg: 50.0, ..HydroParams::default() };
            let run = simulate_traverse(&m, &hydro, Traverse::Descent, 0.01, 600.0, |_| (0.0, 0.0)).unwrap();
            let s = run.summary().unwrap();
            let (ta, tb) = s.window_s;
            let mean_a: f64 = run.samples.iter()
                .filter(|x| x.t_s > ta + 0.01 && x.t_s <= tb)
                .map(|x| x.acceleration_m_s2)
                .sum::<f64>() / run.samples.iter().filter(|x| x.t_s > ta + 0.01 && x.t_s <= tb).count() as f64;
            prop_assert!((mean_a - s.mean_acceleration_m_s2).abs() <= 0.02 * s.mean_acceleration_m_s2.abs() + 1e-6);
        }
    }
}
