//! Scripted headless runs: an initial state, time-stamped valve events and
//! a horizon.

use std::path::Path;

use serde::Deserialize;

use super::world::{Command, InitialConditions, World};
use crate::error::{Error, Result};
use crate::model::{Branch, RobotAssembly};
use crate::pneumatics::ValveState;
use crate::units::{parse_quantity, Dimension};
use crate::vertical::{
    diagnose_non_terminating, summarize, BuoyancyModel, Traverse, TraverseOutcome, VerticalRun, VerticalSample,
};

pub const DESCENT_SCENARIO: &str = include_str!("../../assets/scenarios/descent.toml");
pub const ASCENT_SCENARIO: &str = include_str!("../../assets/scenarios/ascent.toml");
pub const ASCENT_LOW_PRESSURE_SCENARIO: &str = include_str!("../../assets/scenarios/ascent_3psi.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopAt {
    Floor,
    Surface,
    Horizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValveEvent {
    pub t_s: f64,
    pub branch: Branch,
    pub state: ValveState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub horizon_s: f64,
    pub stop_at: StopAt,
    pub initial: InitialConditions,
    pub events: Vec<ValveEvent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    horizon: String,
    #[serde(default = "default_stop")]
    stop_at: StopAt,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    event: Vec<RawEvent>,
}

fn default_stop() -> StopAt {
    StopAt::Horizon
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    depth: Option<String>,
    #[serde(default)]
    fill_front: f64,
    #[serde(default)]
    fill_rear: f64,
    regulator: Option<String>,
    joint_load: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    t: String,
    branch: Branch,
    valve: ValveState,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        let horizon_s = parse_quantity(&raw.horizon, Dimension::Time)?;
        if !(horizon_s > 0.0) {
            return Err(Error::arg("horizon", "must be positive"));
        }
        let initial = InitialConditions {
            depth_m: raw
                .initial
                .depth
                .as_deref()
                .map_or(Ok(0.0), |d| parse_quantity(d, Dimension::Length))?,
            fill_front: raw.initial.fill_front,
            fill_rear: raw.initial.fill_rear,
            regulator_pa: raw
                .initial
                .regulator
                .as_deref()
                .map(|p| parse_quantity(p, Dimension::Pressure))
                .transpose()?,
            joint_load_kg: raw
                .initial
                .joint_load
                .as_deref()
                .map_or(Ok(0.0), |m| parse_quantity(m, Dimension::Mass))?,
            ..InitialConditions::default()
        };
        let mut events = raw
            .event
            .iter()
            .map(|e| {
                Ok(ValveEvent {
                    t_s: parse_quantity(&e.t, Dimension::Time)?,
                    branch: e.branch,
                    state: e.valve,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if events.iter().any(|e| !(e.t_s >= 0.0)) {
            return Err(Error::arg("event", "times must be non-negative"));
        }
        events.sort_by(|a, b| a.t_s.total_cmp(&b.t_s));
        Ok(Self {
            name: raw.name,
            horizon_s,
            stop_at: raw.stop_at,
            initial,
            events,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn descent() -> Self {
        Self::parse(DESCENT_SCENARIO).expect("shipped scenario is valid")
    }

    pub fn ascent() -> Self {
        Self::parse(ASCENT_SCENARIO).expect("shipped scenario is valid")
    }

    pub fn ascent_low_pressure() -> Self {
        Self::parse(ASCENT_LOW_PRESSURE_SCENARIO).expect("shipped scenario is valid")
    }

    fn direction(&self) -> Option<Traverse> {
        match self.stop_at {
            StopAt::Floor => Some(Traverse::Descent),
            StopAt::Surface => Some(Traverse::Ascent),
            StopAt::Horizon => None,
        }
    }
}

/// Runs a scenario with one integration step per tick. Events fire at the
/// tick boundary nearest their time stamp.
pub fn run_scenario(assembly: &RobotAssembly, scenario: &Scenario, dt_s: f64) -> Result<VerticalRun> {
    if !(dt_s > 0.0 && dt_s <= crate::vertical::MAX_STEP_S) {
        return Err(Error::arg("dt", format!("{dt_s} s must lie in (0, {}]", crate::vertical::MAX_STEP_S)));
    }
    let rate = 1.0 / dt_s;
    let mut world = World::with_substep_limit(assembly.clone(), rate, scenario.initial.clone(), dt_s)?;
    let events: Vec<(u64, Command)> = scenario
        .events
        .iter()
        .map(|e| ((e.t_s * rate).round() as u64, Command::valve(e.branch, e.state)))
        .collect();
    let max_ticks = (scenario.horizon_s * rate).ceil() as u64;
    let direction = scenario.direction();
    let target = direction.map(|d| match d {
        Traverse::Descent => assembly.hydro.tank_depth_m,
        Traverse::Ascent => 0.0,
    });
    let sample = |w: &World| {
        let r = w.telemetry();
        VerticalSample {
            t_s: r.t_s,
            depth_m: r.depth_m,
            velocity_m_s: r.velocity_m_s,
            acceleration_m_s2: r.acceleration_m_s2,
            fill_front: r.fill_front,
            fill_rear: r.fill_rear,
        }
    };
    let mut samples = vec![sample(&world)];
    let mut next_event = 0;
    loop {
        let tick = world.tick();
        while next_event < events.len() && events[next_event].0 <= tick {
            world.apply(&events[next_event].1)?;
            next_event += 1;
        }
        if tick > 0 && target.is_some_and(|d| world.vertical().depth_m == d) {
            break;
        }
        if tick >= max_ticks {
            let outcome = match direction {
                None => TraverseOutcome::NonTerminating {
                    horizon_s: scenario.horizon_s,
                    diagnosis: "run to horizon".into(),
                },
                Some(d) => {
                    let (f, r) = world.fill();
                    let force = BuoyancyModel::from_assembly(assembly)?.net_upward_force_n(f, r);
                    TraverseOutcome::NonTerminating {
                        horizon_s: scenario.horizon_s,
                        diagnosis: diagnose_non_terminating(force, d, scenario.horizon_s),
                    }
                }
            };
            return Ok(VerticalRun { samples, outcome });
        }
        world.advance()?;
        samples.push(sample(&world));
    }
    let outcome = match summarize(&samples, &assembly.hydro, direction.expect("target implies direction")) {
        Some(s) => TraverseOutcome::Completed(s),
        None => TraverseOutcome::NonTerminating {
            horizon_s: scenario.horizon_s,
            diagnosis: "traverse too short to cover the summary window".into(),
        },
    };
    Ok(VerticalRun { samples, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_assembly;

    #[test]
    fn shipped_scenarios_parse() {
        let d = Scenario::descent();
        assert_eq!(d.stop_at, StopAt::Floor);
        assert_eq!(d.initial.fill_front, 1.0);
        assert_eq!(d.events.len(), 2);
        let a = Scenario::ascent();
        assert_eq!(a.stop_at, StopAt::Surface);
        assert!(a.initial.regulator_pa.is_some());
        assert!(Scenario::ascent_low_pressure().initial.regulator_pa.unwrap() < a.initial.regulator_pa.unwrap());
    }

    #[test]
    fn descent_scenario_sinks() {
        let run = run_scenario(&default_assembly(), &Scenario::descent(), 0.01).unwrap();
        let s = run.summary().expect("reaches the floor");
        assert!(s.duration_s > s.onset_s);
    }

    #[test]
    fn buoyant_scenario_is_diagnosed() {
        let text = r#"
name = "stuck"
horizon = "5 s"
stop_at = "floor"
[initial]
fill_front = 1.0
fill_rear = 1.0
"#;
        let run = run_scenario(&default_assembly(), &Scenario::parse(text).unwrap(), 0.01).unwrap();
        match run.outcome {
            TraverseOutcome::NonTerminating { diagnosis, .. } => assert!(diagnosis.contains("cannot sink")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_scenarios_rejected() {
        assert!(Scenario::parse("name = \"x\"\nhorizon = \"5 parsecs\"").is_err());
        assert!(Scenario::parse("name = \"x\"\nhorizon = \"5 s\"\nspeed = 3").is_err());
        assert!(run_scenario(&default_assembly(), &Scenario::descent(), 0.5).is_err());
    }
}
