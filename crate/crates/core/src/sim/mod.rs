//! Deterministic session world, wire protocol and scripted scenarios.

mod protocol;
mod scenario;
mod world;

pub use protocol::{
    parse_client_message, replay, serialize_records, ClientMessage, LogEntry, ServerMessage, Session, SessionLog,
    PROTOCOL_VERSION,
};
pub use scenario::{run_scenario, Scenario, StopAt, ValveEvent};
pub use world::{
    Command, InitialConditions, TelemetryRecord, World, MAX_SUBSTEP_S, MAX_TICK_RATE_HZ, MIN_TICK_RATE_HZ,
};
