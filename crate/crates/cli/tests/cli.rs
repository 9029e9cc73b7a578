use std::process::{Command, Output};

fn snakeforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snakeforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_subcommand_prints_usage_and_fails() {
    let o = snakeforge(&["bogus"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn buoyancy_report_csv_and_front_warning() {
    let o = snakeforge(&["buoyancy-report", "--csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().next().unwrap().starts_with("item,"));
    assert!(out.lines().count() > 4);
    assert!(stderr(&o).contains("front"));
}

#[test]
fn pneumatic_fill_emits_trace() {
    let o = snakeforge(&["pneumatic-fill", "--branch", "rear", "--upstream", "2.9psi", "--dt", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "t_s,volume_m3,pressure_pa,flow_m3_s");
    let last = out.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t - 68.0).abs() < 2.0, "rear filled at {t}");
}

#[test]
fn min_upstream_reports_both_units() {
    let o = snakeforge(&["min-upstream", "--deadline", "70"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains(" Pa") && out.contains("psi gauge"), "{out}");
}

#[test]
fn infeasible_deadline_is_an_error() {
    let o = snakeforge(&["min-upstream", "--deadline", "0.1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn bad_unit_is_rejected() {
    let o = snakeforge(&["pneumatic-fill", "--branch", "rear", "--upstream", "2.9 furlongs"]);
    assert!(!o.status.success());
}

#[test]
fn missing_manifest_is_an_error() {
    let o = snakeforge(&["--assembly", "/nonexistent/robot.toml", "buoyancy-report"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nonexistent"));
}

#[test]
fn simulate_shipped_descent() {
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/assets/scenarios/descent.toml");
    let o = snakeforge(&["simulate", "--scenario", scenario]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("mean_accel_m_s2"));
}

#[test]
fn comms_default_chain() {
    let o = snakeforge(&["comms"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("8.920"));
}

#[test]
fn gait_and_hysteresis_and_drivetrain() {
    let o = snakeforge(&["gait", "--mode", "sidewinding", "--duration", "1s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 12);
    let o = snakeforge(&["gait", "--mode", "screwing", "--screw-speed", "20rad/s", "--t", "1s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["screw_speeds_rad_s"][0], 20.0);
    let o = snakeforge(&["hysteresis-sweep", "--load", "6.25lbs"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("command_deg,actual_deg\n"));
    let o = snakeforge(&["hysteresis-sweep", "--load", "6.25lbs", "--summary"]);
    assert!(stdout(&o).contains("4.15"));
    let o = snakeforge(&["drivetrain", "--speed", "50rad/s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("6.83"));
}

#[test]
fn bladder_design_for_middle_segment() {
    let o = snakeforge(&["bladder-design", "--segment", "middle 1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("outer_textile_m"));
}

#[test]
fn power_budget_over_limit_fails() {
    assert!(snakeforge(&["power-budget", "--draw", "20"]).status.success());
    assert!(!snakeforge(&["power-budget", "--draw", "1000"]).status.success());
}

#[test]
fn replay_of_recorded_log() {
    use snakeforge_core::config::default_assembly;
    use snakeforge_core::sim::{Command as SimCommand, InitialConditions, Session};
    use snakeforge_core::model::Branch;
    use snakeforge_core::pneumatics::ValveState;

    let mut s = Session::new(1, default_assembly(), 10.0, InitialConditions::default(), true).unwrap();
    s.submit(SimCommand::valve(Branch::Rear, ValveState::Fill));
    for _ in 0..30 {
        s.tick().unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    std::fs::write(&path, s.take_log().unwrap().to_jsonl()).unwrap();
    let o = snakeforge(&["serve", "--replay", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("identical"));

    let text = std::fs::read_to_string(&path).unwrap();
    let tampered: Vec<String> = text
        .lines()
        .map(|line| {
            let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
            if v["kind"] == "telemetry" && v["tick"] == 7 {
                v["depth_m"] = serde_json::json!(0.123);
            }
            v.to_string()
        })
        .collect();
    std::fs::write(&path, tampered.join("\n")).unwrap();
    let o = snakeforge(&["serve", "--replay", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("record 7"), "{}", stderr(&o));
}
