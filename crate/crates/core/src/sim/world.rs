//! The deterministic world a session drives: two pneumatic branches, the
//! vertical body and the joint chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{apply_hysteresis, GaitMode, JointAngles, PlayState, MAX_SCREW_SPEED_RAD_S};
use crate::model::{Branch, RobotAssembly};
use crate::pneumatics::{BranchPlant, ValveState};
use crate::units::{parse_quantity, Dimension};
use crate::vertical::{step, BuoyancyModel, VerticalState};

/// Largest integration step used inside a tick.
pub const MAX_SUBSTEP_S: f64 = 0.01;
pub const MIN_TICK_RATE_HZ: f64 = 1.0;
pub const MAX_TICK_RATE_HZ: f64 = 100.0;

/// Operator commands. They take effect at the next tick boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase", deny_unknown_fields)]
pub enum Command {
    /// `open: true` fills from the regulator, `open: false` closes, and
    /// `vent: true` opens the exhaust.
    Valve {
        branch: Branch,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        open: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vent: Option<bool>,
    },
    Gait(GaitMode),
    Screw { speed_rad_s: f64 },
    /// Regulator set point, as a unit-suffixed string.
    Upstream { pressure: String },
    Reset,
}

impl Command {
    pub fn valve(branch: Branch, state: ValveState) -> Self {
        match state {
            ValveState::Fill => Command::Valve {
                branch,
                open: Some(true),
                vent: None,
            },
            ValveState::Closed => Command::Valve {
                branch,
                open: Some(false),
                vent: None,
            },
            ValveState::Vent => Command::Valve {
                branch,
                open: None,
                vent: Some(true),
            },
        }
    }
}

/// Where a world starts and returns to on reset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub depth_m: f64,
    pub fill_front: f64,
    pub fill_rear: f64,
    #[serde(default)]
    pub valve_front: ValveState,
    #[serde(default)]
    pub valve_rear: ValveState,
    /// Regulator set point; the manifest value when absent.
    #[serde(default)]
    pub regulator_pa: Option<f64>,
    #[serde(default)]
    pub gait: GaitMode,
    /// Load hung on every joint when evaluating backlash.
    #[serde(default)]
    pub joint_load_kg: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            depth_m: 0.0,
            fill_front: 0.0,
            fill_rear: 0.0,
            valve_front: ValveState::Closed,
            valve_rear: ValveState::Closed,
            regulator_pa: None,
            gait: GaitMode::Idle,
            joint_load_kg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub tick: u64,
    pub t_s: f64,
    pub depth_m: f64,
    pub velocity_m_s: f64,
    pub acceleration_m_s2: f64,
    pub fill_front: f64,
    pub fill_rear: f64,
    pub valve_front: ValveState,
    pub valve_rear: ValveState,
    pub joints: Vec<JointAngles>,
    pub screw_speeds_rad_s: Vec<f64>,
    pub gait: String,
}

#[derive(Debug, Clone)]
pub struct World {
    assembly: RobotAssembly,
    initial: InitialConditions,
    buoyancy: BuoyancyModel,
    tick_rate_hz: f64,
    substeps: u32,
    substep_s: f64,
    tick: u64,
    plants: [BranchPlant; 2],
    volumes: [f64; 2],
    valves: [ValveState; 2],
    vertical: VerticalState,
    gait: GaitMode,
    play: Vec<[PlayState; 2]>,
    joints: Vec<JointAngles>,
    screw_speeds: Vec<f64>,
}

impl World {
    pub fn new(assembly: RobotAssembly, tick_rate_hz: f64, initial: InitialConditions) -> Result<Self> {
        if !(MIN_TICK_RATE_HZ..=MAX_TICK_RATE_HZ).contains(&tick_rate_hz) {
            return Err(Error::arg(
                "tick_rate",
                format!("{tick_rate_hz} Hz outside {MIN_TICK_RATE_HZ}..={MAX_TICK_RATE_HZ} Hz"),
            ));
        }
        Self::with_substep_limit(assembly, tick_rate_hz, initial, MAX_SUBSTEP_S)
    }

    /// Batch runs may tick faster than a live service; the substep limit
    /// still bounds the integration step.
    pub fn with_substep_limit(
        assembly: RobotAssembly,
        tick_rate_hz: f64,
        initial: InitialConditions,
        max_substep_s: f64,
    ) -> Result<Self> {
        if !(tick_rate_hz > 0.0 && tick_rate_hz.is_finite()) {
            return Err(Error::arg("tick_rate", "must be positive"));
        }
        if !(max_substep_s > 0.0) {
            return Err(Error::arg("substep", "must be positive"));
        }
        for (name, f) in [("fill_front", initial.fill_front), ("fill_rear", initial.fill_rear)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::arg("initial", format!("{name} {f} outside [0, 1]")));
            }
        }
        if !(0.0..=assembly.hydro.tank_depth_m).contains(&initial.depth_m) {
            return Err(Error::arg("initial", "depth outside the tank"));
        }
        if !(initial.joint_load_kg >= 0.0) {
            return Err(Error::arg("initial", "joint load must be non-negative"));
        }
        let period = 1.0 / tick_rate_hz;
        let substeps = (period / max_substep_s - 1e-9).ceil().max(1.0) as u32;
        let buoyancy = BuoyancyModel::from_assembly(&assembly)?;
        let plants = [
            BranchPlant::for_branch(&assembly, Branch::Front)?,
            BranchPlant::for_branch(&assembly, Branch::Rear)?,
        ];
        let joint_count = assembly.joint_count();
        let segments = assembly.segments.len();
        let mut world = Self {
            assembly,
            initial,
            buoyancy,
            tick_rate_hz,
            substeps,
            substep_s: period / substeps as f64,
            tick: 0,
            plants,
            volumes: [0.0; 2],
            valves: [ValveState::Closed; 2],
            vertical: VerticalState::default(),
            gait: GaitMode::Idle,
            play: vec![[PlayState::default(); 2]; joint_count],
            joints: vec![JointAngles::default(); joint_count],
            screw_speeds: vec![0.0; segments],
        };
        world.reset()?;
        Ok(world)
    }

    pub fn assembly(&self) -> &RobotAssembly {
        &self.assembly
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn tick_rate_hz(&self) -> f64 {
        self.tick_rate_hz
    }

    pub fn substep_s(&self) -> f64 {
        self.substep_s
    }

    pub fn time_s(&self) -> f64 {
        self.tick as f64 / self.tick_rate_hz
    }

    pub fn plant(&self, branch: Branch) -> &BranchPlant {
        &self.plants[branch.index()]
    }

    pub fn vertical(&self) -> &VerticalState {
        &self.vertical
    }

    pub fn fill(&self) -> (f64, f64) {
        (
            self.plants[0].fill_fraction(self.volumes[0]),
            self.plants[1].fill_fraction(self.volumes[1]),
        )
    }

    fn set_regulator(&mut self, pa: f64) -> Result<()> {
        let supply = self.assembly.pneumatics.supply_pa;
        if !(pa >= 0.0 && pa <= supply) {
            return Err(Error::Command(format!(
                "regulator {pa:.0} Pa outside 0..={supply:.0} Pa gauge"
            )));
        }
        for p in &mut self.plants {
            p.upstream_pa = pa;
        }
        Ok(())
    }

    pub fn reset(&mut self) -> Result<()> {
        let init = self.initial.clone();
        self.tick = 0;
        self.set_regulator(init.regulator_pa.unwrap_or(self.assembly.pneumatics.regulator_setpoint_pa))?;
        self.volumes = [
            init.fill_front * self.plants[0].full_volume_m3,
            init.fill_rear * self.plants[1].full_volume_m3,
        ];
        self.valves = [init.valve_front, init.valve_rear];
        self.vertical = VerticalState::at_depth(init.depth_m);
        for p in &mut self.play {
            *p = [PlayState::default(); 2];
        }
        self.set_gait(init.gait)?;
        self.update_chain()
    }

    fn set_gait(&mut self, gait: GaitMode) -> Result<()> {
        // Evaluate once so bad parameters are rejected before they stick.
        let segments = self.assembly.segments.len();
        gait.command(self.time_s(), segments, &self.assembly.joints, &self.assembly.drivetrain)?;
        self.gait = gait;
        Ok(())
    }

    pub fn apply(&mut self, command: &Command) -> Result<()> {
        match command {
            Command::Valve { branch, open, vent } => {
                let state = match (open, vent) {
                    (_, Some(true)) => ValveState::Vent,
                    (Some(true), _) => ValveState::Fill,
                    (Some(false), _) | (None, Some(false)) => ValveState::Closed,
                    (None, None) => {
                        return Err(Error::Command("valve needs 'open' or 'vent'".into()));
                    }
                };
                if *open == Some(true) && *vent == Some(true) {
                    return Err(Error::Command("valve cannot fill and vent at once".into()));
                }
                self.valves[branch.index()] = state;
                Ok(())
            }
            Command::Gait(mode) => self.set_gait(mode.clone()),
            Command::Screw { speed_rad_s } => {
                let s = *speed_rad_s;
                if !(0.0..=MAX_SCREW_SPEED_RAD_S).contains(&s) {
                    return Err(Error::Command(format!(
                        "screw speed {s} rad/s outside 0..={MAX_SCREW_SPEED_RAD_S}"
                    )));
                }
                let next = match self.gait.clone() {
                    GaitMode::Idle => GaitMode::Screwing {
                        turn_radius_m: None,
                        screw_speed_rad_s: s,
                    },
                    GaitMode::Screwing { turn_radius_m, .. } => GaitMode::Screwing {
                        turn_radius_m,
                        screw_speed_rad_s: s,
                    },
                    GaitMode::Sidewinding(mut p) => {
                        p.screw_speed_rad_s = s;
                        GaitMode::Sidewinding(p)
                    }
                    GaitMode::Wheeling { .. } => {
                        return Err(Error::Command(
                            "screw speed follows ground speed while wheeling".into(),
                        ));
                    }
                };
                self.set_gait(next)
            }
            Command::Upstream { pressure } => {
                let pa = parse_quantity(pressure, Dimension::Pressure)
                    .map_err(|e| Error::Command(e.to_string()))?;
                self.set_regulator(pa)
            }
            Command::Reset => self.reset(),
        }
    }

    fn update_chain(&mut self) -> Result<()> {
        let a = &self.assembly;
        let cmd = self
            .gait
            .command(self.time_s(), a.segments.len(), &a.joints, &a.drivetrain)?;
        let load = self.initial.joint_load_kg;
        for (i, target) in cmd.joints.iter().enumerate() {
            let [pitch_state, yaw_state] = &mut self.play[i];
            self.joints[i] = JointAngles {
                pitch_rad: apply_hysteresis(target.pitch_rad, load, &a.hysteresis, pitch_state)?,
                yaw_rad: apply_hysteresis(target.yaw_rad, load, &a.hysteresis, yaw_state)?,
            };
        }
        self.screw_speeds = cmd.screw_speeds_rad_s;
        Ok(())
    }

    /// One integration substep: fill fractions are read at the start and
    /// held over the step, then the bladder volumes advance.
    fn substep(&mut self) -> Result<()> {
        let dt = self.substep_s;
        let fill = self.fill();
        self.vertical = step(&self.buoyancy, &self.assembly.hydro, fill, &self.vertical, dt)?;
        for i in 0..2 {
            self.volumes[i] = self.plants[i].advance(self.volumes[i], self.valves[i], dt);
        }
        Ok(())
    }

    /// Advances one tick and returns the record at its end.
    pub fn advance(&mut self) -> Result<TelemetryRecord> {
        for _ in 0..self.substeps {
            self.substep()?;
        }
        self.tick += 1;
        self.vertical.t_s = self.time_s();
        self.update_chain()?;
        Ok(self.telemetry())
    }

    pub fn telemetry(&self) -> TelemetryRecord {
        let (fill_front, fill_rear) = self.fill();
        TelemetryRecord {
            tick: self.tick,
            t_s: self.time_s(),
            depth_m: self.vertical.depth_m,
            velocity_m_s: self.vertical.velocity_m_s,
            acceleration_m_s2: self.vertical.acceleration_m_s2,
            fill_front,
            fill_rear,
            valve_front: self.valves[0],
            valve_rear: self.valves[1],
            joints: self.joints.clone(),
            screw_speeds_rad_s: self.screw_speeds.clone(),
            gait: self.gait.name().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_assembly;
    use crate::pneumatics::simulate_fill;
    use crate::vertical::HydroParams;

    fn world(rate: f64) -> World {
        World::new(default_assembly(), rate, InitialConditions::default()).unwrap()
    }

    #[test]
    fn cadence_is_exact() {
        let mut w = world(10.0);
        let mut last = w.telemetry().t_s;
        assert_eq!(last, 0.0);
        for k in 1..=50u64 {
            let r = w.advance().unwrap();
            assert_eq!(r.t_s, k as f64 / 10.0);
            assert!(r.t_s > last);
            last = r.t_s;
        }
        assert_eq!(w.substep_s(), 0.01);
    }

    #[test]
    fn deflated_default_sinks() {
        let mut w = world(10.0);
        for _ in 0..30 {
            w.advance().unwrap();
        }
        assert!(w.vertical().depth_m > 0.0);
        assert!(w.vertical().velocity_m_s > 0.0);
    }

    #[test]
    fn matches_fill_trace_and_step_composition() {
        let a = default_assembly();
        let mut w = World::new(a.clone(), 100.0, InitialConditions::default()).unwrap();
        w.apply(&Command::valve(Branch::Rear, ValveState::Fill)).unwrap();
        let plant = BranchPlant::for_branch(&a, Branch::Rear).unwrap();
        let trace = simulate_fill(&plant, 0.01).unwrap();
        let model = BuoyancyModel::from_assembly(&a).unwrap();
        let mut state = VerticalState::default();
        for k in 1..2000usize {
            let before = w.fill();
            let r = w.advance().unwrap();
            let sample = &trace.samples[k.min(trace.samples.len() - 1)];
            if k + 1 < trace.samples.len() {
                assert_eq!(r.fill_rear, sample.volume_m3 / plant.full_volume_m3, "tick {k}");
            }
            state = step(&model, &a.hydro, before, &state, 0.01).unwrap();
            assert_eq!(r.depth_m, state.depth_m, "tick {k}");
            assert_eq!(r.velocity_m_s, state.velocity_m_s, "tick {k}");
            state.t_s = r.t_s;
        }
    }

    #[test]
    fn invalid_commands_leave_state_alone() {
        let mut w = world(10.0);
        let before = w.telemetry();
        assert!(w.apply(&Command::Screw { speed_rad_s: 80.0 }).is_err());
        assert!(w
            .apply(&Command::Upstream {
                pressure: "40 psi".into()
            })
            .is_err());
        assert!(w
            .apply(&Command::Valve {
                branch: Branch::Front,
                open: None,
                vent: None
            })
            .is_err());
        let bad_gait = GaitMode::Screwing {
            turn_radius_m: Some(0.01),
            screw_speed_rad_s: 5.0,
        };
        assert!(w.apply(&Command::Gait(bad_gait)).is_err());
        assert_eq!(w.telemetry(), before);
    }

    #[test]
    fn reset_restores_initial_state() {
        let mut w = world(10.0);
        let start = w.telemetry();
        w.apply(&Command::valve(Branch::Front, ValveState::Fill)).unwrap();
        w.apply(&Command::Screw { speed_rad_s: 20.0 }).unwrap();
        for _ in 0..20 {
            w.advance().unwrap();
        }
        w.apply(&Command::Reset).unwrap();
        assert_eq!(w.telemetry(), start);
    }

    #[test]
    fn tick_rate_bounds() {
        let a = default_assembly();
        assert!(World::new(a.clone(), 0.5, InitialConditions::default()).is_err());
        assert!(World::new(a.clone(), 101.0, InitialConditions::default()).is_err());
        assert!(World::new(a, 100.0, InitialConditions::default()).is_ok());
    }

    #[test]
    fn command_wire_format() {
        let c: Command = serde_json::from_str(r#"{"action":"valve","branch":"rear","open":true}"#).unwrap();
        assert_eq!(c, Command::valve(Branch::Rear, ValveState::Fill));
        let g: Command =
            serde_json::from_str(r#"{"action":"gait","mode":"screwing","screw_speed_rad_s":12.0}"#).unwrap();
        assert!(matches!(g, Command::Gait(GaitMode::Screwing { .. })));
        let r: Command = serde_json::from_str(r#"{"action":"reset"}"#).unwrap();
        assert_eq!(r, Command::Reset);
        assert!(serde_json::from_str::<Command>(r#"{"action":"fly"}"#).is_err());
    }

    #[test]
    fn hydro_defaults_are_sane() {
        assert!(HydroParams::default().validate().is_empty());
    }
}
