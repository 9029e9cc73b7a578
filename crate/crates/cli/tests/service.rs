use std::path::Path;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use snakeforge::service::{self, ServiceConfig};
use snakeforge_core::config::default_assembly;
use snakeforge_core::sim::{replay, serialize_records, InitialConditions, SessionLog, World};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn config(record: Option<&Path>) -> ServiceConfig {
    ServiceConfig {
        assembly: default_assembly(),
        tick_rate_hz: 10.0,
        speedup: 20.0,
        initial: InitialConditions::default(),
        record: record.map(Path::to_path_buf),
    }
}

async fn start(config: ServiceConfig) -> String {
    let listener = service::bind("127.0.0.1:0".parse().unwrap()).await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(service::serve(listener, config));
    format!("ws://{addr}/ws")
}

async fn next_json(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("server went quiet")
            .expect("stream ended")
            .expect("socket error");
        if let Message::Text(text) = msg {
            return serde_json::from_str(text.as_str()).unwrap();
        }
    }
}

async fn next_of_type(ws: &mut Ws, kind: &str) -> Value {
    loop {
        let v = next_json(ws).await;
        if v["type"] == kind {
            return v;
        }
    }
}

async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.into())).await.unwrap();
}

async fn wait_for_file(path: &Path) -> String {
    for _ in 0..200 {
        if let Ok(text) = std::fs::read_to_string(path) {
            if !text.is_empty() {
                return text;
            }
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    panic!("no log at {}", path.display());
}

#[tokio::test]
async fn hello_then_telemetry() {
    let url = start(config(None)).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    let hello = next_json(&mut ws).await;
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["version"], 1);
    let first = next_of_type(&mut ws, "telemetry").await;
    assert_eq!(first["tick"], 0);
    let next = next_of_type(&mut ws, "telemetry").await;
    assert_eq!(next["tick"], 1);
    assert!((next["t_s"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[tokio::test]
async fn malformed_message_is_reported_and_session_survives() {
    let url = start(config(None)).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    next_of_type(&mut ws, "hello").await;
    send(&mut ws, "{not json").await;
    let err = next_of_type(&mut ws, "error").await;
    assert_eq!(err["code"], "malformed");
    send(&mut ws, r#"{"type":"ping"}"#).await;
    assert_eq!(next_of_type(&mut ws, "error").await["code"], "unknown_type");
    send(&mut ws, r#"{"type":"command","action":"valve","branch":"middle","open":true}"#).await;
    assert_eq!(next_of_type(&mut ws, "error").await["code"], "bad_command");
    let a = next_of_type(&mut ws, "telemetry").await["tick"].as_u64().unwrap();
    let b = next_of_type(&mut ws, "telemetry").await["tick"].as_u64().unwrap();
    assert_eq!(b, a + 1);
}

#[tokio::test]
async fn opening_rear_valve_fills_rear_bladders() {
    let url = start(config(None)).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    next_of_type(&mut ws, "hello").await;
    send(&mut ws, r#"{"type":"command","action":"valve","branch":"rear","open":true}"#).await;
    let mut last = 0.0;
    for _ in 0..20 {
        let t = next_of_type(&mut ws, "telemetry").await;
        last = t["fill_rear"].as_f64().unwrap();
        assert_eq!(t["fill_front"].as_f64().unwrap(), 0.0);
    }
    assert!(last > 0.0, "rear fill stayed at {last}");
}

#[tokio::test]
async fn sessions_are_independent() {
    let url = start(config(None)).await;
    let (mut a, _) = connect_async(&url).await.unwrap();
    let (mut b, _) = connect_async(&url).await.unwrap();
    next_of_type(&mut a, "hello").await;
    next_of_type(&mut b, "hello").await;
    send(&mut a, r#"{"type":"command","action":"valve","branch":"front","open":true}"#).await;
    for _ in 0..15 {
        next_of_type(&mut a, "telemetry").await;
    }
    let ta = next_of_type(&mut a, "telemetry").await;
    let tb = next_of_type(&mut b, "telemetry").await;
    assert!(ta["fill_front"].as_f64().unwrap() > 0.0);
    assert_eq!(tb["fill_front"].as_f64().unwrap(), 0.0);
    assert_eq!(tb["valve_front"], "closed");
}

#[tokio::test]
async fn recorded_session_replays_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.jsonl");
    let url = start(config(Some(&path))).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    next_of_type(&mut ws, "hello").await;
    let script = [
        r#"{"type":"command","action":"valve","branch":"rear","open":true}"#,
        r#"{"type":"command","action":"gait","mode":"screwing","screw_speed_rad_s":12.0}"#,
        r#"{"type":"command","action":"valve","branch":"front","open":true}"#,
        r#"{"type":"command","action":"upstream","pressure":"6 psi"}"#,
        r#"{"type":"command","action":"valve","branch":"rear","vent":true}"#,
        r#"{"type":"command","action":"reset"}"#,
        r#"{"type":"command","action":"valve","branch":"front","open":true}"#,
    ];
    for cmd in script {
        send(&mut ws, cmd).await;
        for _ in 0..5 {
            next_of_type(&mut ws, "telemetry").await;
        }
    }
    ws.close(None).await.unwrap();
    drop(ws);

    let log = SessionLog::from_jsonl(&wait_for_file(&path).await).unwrap();
    assert_eq!(log.commands().count(), script.len());
    let recorded = serialize_records(log.telemetry());
    assert!(recorded.len() > 30);
    let replayed = serialize_records(&replay(&default_assembly(), &log).unwrap());
    assert_eq!(recorded, replayed);
}

#[tokio::test]
async fn passive_console_matches_unconnected_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("passive.jsonl");
    let url = start(config(Some(&path))).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    next_of_type(&mut ws, "hello").await;
    for _ in 0..25 {
        next_of_type(&mut ws, "telemetry").await;
    }
    ws.close(None).await.unwrap();
    drop(ws);

    let log = SessionLog::from_jsonl(&wait_for_file(&path).await).unwrap();
    assert_eq!(log.commands().count(), 0);
    let recorded: Vec<_> = log.telemetry().cloned().collect();

    let mut world = World::new(default_assembly(), 10.0, InitialConditions::default()).unwrap();
    let mut headless = vec![world.telemetry()];
    while headless.len() < recorded.len() {
        headless.push(world.advance().unwrap());
    }
    assert_eq!(serialize_records(&recorded), serialize_records(&headless));
}
