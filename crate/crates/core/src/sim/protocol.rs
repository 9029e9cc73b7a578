//! Wire messages, sessions and the record/replay log.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::world::{Command, InitialConditions, TelemetryRecord, World};
use crate::error::{Error, Result};
use crate::model::RobotAssembly;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Command(Command),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Hello { version: u32 },
    Telemetry(TelemetryRecord),
    Error { code: String, message: String },
}

impl ServerMessage {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

/// Parses one client text frame. Errors carry the code sent back on the wire.
pub fn parse_client_message(text: &str) -> std::result::Result<ClientMessage, (String, String)> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ("malformed".to_string(), e.to_string()))?;
    match value.get("type").and_then(|t| t.as_str()) {
        Some("command") => {}
        Some(other) => return Err(("unknown_type".into(), format!("unknown message type '{other}'"))),
        None => return Err(("malformed".into(), "missing 'type' field".into())),
    }
    serde_json::from_value(value).map_err(|e| ("bad_command".to_string(), e.to_string()))
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogEntry {
    Header {
        version: u32,
        tick_rate_hz: f64,
        assembly: String,
        initial: InitialConditions,
    },
    /// Applied at the boundary that starts tick `tick + 1`.
    Command { tick: u64, command: Command },
    Telemetry(TelemetryRecord),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLog {
    pub entries: Vec<LogEntry>,
}

impl SessionLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}", serde_json::to_string(e).expect("log entries serialize"));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(Self { entries })
    }

    pub fn telemetry(&self) -> impl Iterator<Item = &TelemetryRecord> {
        self.entries.iter().filter_map(|e| match e {
            LogEntry::Telemetry(t) => Some(t),
            _ => None,
        })
    }

    pub fn commands(&self) -> impl Iterator<Item = (u64, &Command)> {
        self.entries.iter().filter_map(|e| match e {
            LogEntry::Command { tick, command } => Some((*tick, command)),
            _ => None,
        })
    }

    pub fn header(&self) -> Option<(f64, &InitialConditions)> {
        self.entries.iter().find_map(|e| match e {
            LogEntry::Header {
                tick_rate_hz, initial, ..
            } => Some((*tick_rate_hz, initial)),
            _ => None,
        })
    }
}

/// A world plus its pending commands. Only the owner mutates it; other
/// threads hand commands over through [`Session::submit`].
#[derive(Debug)]
pub struct Session {
    pub id: u64,
    world: World,
    queue: VecDeque<Command>,
    log: Option<SessionLog>,
}

impl Session {
    pub fn new(
        id: u64,
        assembly: RobotAssembly,
        tick_rate_hz: f64,
        initial: InitialConditions,
        record: bool,
    ) -> Result<Self> {
        let name = assembly.name.clone();
        let world = World::new(assembly, tick_rate_hz, initial.clone())?;
        let log = record.then(|| SessionLog {
            entries: vec![
                LogEntry::Header {
                    version: PROTOCOL_VERSION,
                    tick_rate_hz,
                    assembly: name,
                    initial,
                },
                LogEntry::Telemetry(world.telemetry()),
            ],
        });
        Ok(Self {
            id,
            world,
            queue: VecDeque::new(),
            log,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn submit(&mut self, command: Command) {
        self.queue.push_back(command);
    }

    /// Applies queued commands in arrival order, then advances one tick.
    /// Rejected commands are returned alongside the record and change
    /// nothing.
    pub fn tick(&mut self) -> Result<(TelemetryRecord, Vec<(Command, Error)>)> {
        let mut rejected = Vec::new();
        let tick = self.world.tick();
        while let Some(cmd) = self.queue.pop_front() {
            let snapshot = self.world.clone();
            match self.world.apply(&cmd) {
                Ok(()) => {
                    if let Some(log) = &mut self.log {
                        log.entries.push(LogEntry::Command { tick, command: cmd });
                    }
                }
                Err(e) => {
                    self.world = snapshot;
                    rejected.push((cmd, e));
                }
            }
        }
        let record = self.world.advance()?;
        if let Some(log) = &mut self.log {
            log.entries.push(LogEntry::Telemetry(record.clone()));
        }
        Ok((record, rejected))
    }

    pub fn log(&self) -> Option<&SessionLog> {
        self.log.as_ref()
    }

    pub fn take_log(&mut self) -> Option<SessionLog> {
        self.log.take()
    }
}

/// Re-runs a recorded log headless and returns the telemetry it produces,
/// one record per recorded one.
pub fn replay(assembly: &RobotAssembly, log: &SessionLog) -> Result<Vec<TelemetryRecord>> {
    let (rate, initial) = log
        .header()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "log has no header".into(),
        })?;
    let mut world = World::new(assembly.clone(), rate, initial.clone())?;
    let recorded = log.telemetry().count();
    let mut commands = log.commands().peekable();
    let mut out = Vec::with_capacity(recorded);
    if recorded > 0 {
        out.push(world.telemetry());
    }
    while out.len() < recorded {
        let tick = world.tick();
        while let Some((_, cmd)) = commands.next_if(|(t, _)| *t == tick) {
            world.apply(cmd)?;
        }
        out.push(world.advance()?);
    }
    Ok(out)
}

/// Serialized records, for bitwise comparison.
pub fn serialize_records<'a>(records: impl IntoIterator<Item = &'a TelemetryRecord>) -> Vec<String> {
    records
        .into_iter()
        .map(|r| serde_json::to_string(r).expect("records serialize"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_assembly;
    use crate::kinematics::{GaitMode, SidewindingParams};
    use crate::model::Branch;
    use crate::pneumatics::ValveState;

    #[test]
    fn hello_and_error_shapes() {
        assert_eq!(
            ServerMessage::Hello { version: 1 }.to_json(),
            r#"{"type":"hello","version":1}"#
        );
        let e = ServerMessage::error("bad_command", "nope").to_json();
        assert_eq!(e, r#"{"type":"error","code":"bad_command","message":"nope"}"#);
    }

    #[test]
    fn telemetry_is_flat() {
        let w = World::new(default_assembly(), 10.0, InitialConditions::default()).unwrap();
        let json = ServerMessage::Telemetry(w.telemetry()).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["type"], "telemetry");
        assert_eq!(v["depth_m"], 0.0);
        assert_eq!(v["gait"], "idle");
    }

    #[test]
    fn client_parse_errors_have_codes() {
        assert_eq!(parse_client_message("{").unwrap_err().0, "malformed");
        assert_eq!(parse_client_message(r#"{"type":"ping"}"#).unwrap_err().0, "unknown_type");
        assert_eq!(
            parse_client_message(r#"{"type":"command","action":"valve","branch":"middle","open":true}"#)
                .unwrap_err()
                .0,
            "bad_command"
        );
        let ok = parse_client_message(r#"{"type":"command","action":"valve","branch":"rear","open":true}"#).unwrap();
        assert_eq!(ok, ClientMessage::Command(Command::valve(Branch::Rear, ValveState::Fill)));
    }

    #[test]
    fn replay_reproduces_session_bitwise() {
        let a = default_assembly();
        let mut s = Session::new(1, a.clone(), 20.0, InitialConditions::default(), true).unwrap();
        for k in 0..400 {
            match k {
                3 => s.submit(Command::valve(Branch::Rear, ValveState::Fill)),
                50 => s.submit(Command::Gait(GaitMode::Sidewinding(SidewindingParams {
                    amplitude_pitch_rad: 0.3,
                    amplitude_yaw_rad: 0.6,
                    frequency_hz: 0.5,
                    phase_lag_rad: 0.8,
                    screw_speed_rad_s: 0.0,
                }))),
                80 => {
                    s.submit(Command::Screw { speed_rad_s: 99.0 });
                    s.submit(Command::valve(Branch::Front, ValveState::Fill));
                }
                300 => s.submit(Command::valve(Branch::Rear, ValveState::Vent)),
                _ => {}
            }
            let (_, rejected) = s.tick().unwrap();
            assert_eq!(rejected.len(), usize::from(k == 80));
        }
        let log = SessionLog::from_jsonl(&s.log().unwrap().to_jsonl()).unwrap();
        let live = serialize_records(s.log().unwrap().telemetry());
        let replayed = replay(&a, &log).unwrap();
        assert_eq!(live, serialize_records(&replayed));
        assert_eq!(live.len(), 401);
    }
}
