#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use snakeforge::service::{self, ServiceConfig};
use snakeforge_core::calibration::{calibrate, CalibrationTargets};
use snakeforge_core::comms::{max_control_rate, round_trip_latency, run_event_simulation, CommandStream, Jitter};
use snakeforge_core::config::{default_assembly, load_assembly_file};
use snakeforge_core::hydrostatics::{
    assembly_buoyancy_report, bladder_volume_for_force, fill_by_branch, flat_pattern_with_seam,
    required_bladder_force, segments_buoyancy_report, solve_bladder_geometry, torus_volume,
    DEFAULT_MARGIN_FRACTION, DEFAULT_SIZING_BUFFER,
};
use snakeforge_core::kinematics::{
    hysteresis_sweep, loop_area, loop_width, screw_output, GaitMode, SidewindingParams,
};
use snakeforge_core::model::{Branch, RobotAssembly};
use snakeforge_core::pneumatics::{
    inflation_error_vs_target, min_upstream_pressure, simulate_fill_from, BranchPlant, ValveState,
    DEFAULT_FILL_HORIZON_S,
};
use snakeforge_core::power::power_budget_check;
use snakeforge_core::sim::{replay, run_scenario, serialize_records, InitialConditions, Scenario, SessionLog};
use snakeforge_core::units::{parse_quantity, Dimension, PA_PER_PSI};
use snakeforge_core::vertical::TraverseOutcome;

#[derive(Parser)]
#[command(name = "snakeforge", version, about = "Snake robot design checks and simulator")]
struct Cli {
    /// Robot manifest (TOML). The shipped four-segment build when omitted.
    #[arg(long, global = true)]
    assembly: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-item weight, buoyancy and net force.
    BuoyancyReport(BuoyancyArgs),
    /// Bladder tube diameter and flat textile pattern.
    BladderDesign(BladderArgs),
    /// Inflation trace of one branch as CSV.
    PneumaticFill(FillArgs),
    /// Lowest regulator setting that fills every branch in time.
    MinUpstream(MinUpstreamArgs),
    /// Joint and screw commands of a gait as CSV.
    Gait(GaitArgs),
    /// Backlash loop of one joint under load.
    HysteresisSweep(HysteresisArgs),
    /// Screw shell torque and efficiency at a speed.
    Drivetrain(DrivetrainArgs),
    /// Bus latency model and event simulation.
    Comms(CommsArgs),
    /// Run a sink/rise scenario.
    Simulate(SimulateArgs),
    /// Electrical draw against the segment and system limits.
    PowerBudget(PowerArgs),
    /// Re-derive the shipped pneumatic and hydrodynamic constants.
    Calibrate(CalibrateArgs),
    /// Live simulation service for the operator console.
    Serve(ServeArgs),
}

fn quantity(dim: Dimension) -> impl Fn(&str) -> Result<f64, String> + Clone + Send + Sync + 'static {
    move |s: &str| parse_quantity(s, dim).map_err(|e| e.to_string())
}

#[derive(Args)]
struct BuoyancyArgs {
    /// Fill fraction applied to every bladder.
    #[arg(long, default_value_t = 0.0)]
    fill: f64,
    #[arg(long)]
    fill_front: Option<f64>,
    #[arg(long)]
    fill_rear: Option<f64>,
    /// CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct BladderArgs {
    /// Volume one bladder must displace, e.g. "0.00143 m3".
    #[arg(long, value_parser = quantity(Dimension::Volume), conflicts_with = "segment")]
    target_volume: Option<f64>,
    /// Size the bladder to lift this segment and its shells instead.
    #[arg(long)]
    segment: Option<String>,
    /// Centerline-circle diameter.
    #[arg(long, value_parser = quantity(Dimension::Length), default_value = "0.16 m")]
    major: f64,
    #[arg(long, value_parser = quantity(Dimension::Length), default_value = "0 m")]
    seam: f64,
    #[arg(long, default_value_t = DEFAULT_MARGIN_FRACTION)]
    margin: f64,
    #[arg(long, default_value_t = DEFAULT_SIZING_BUFFER)]
    buffer: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Front,
    Rear,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Front => Branch::Front,
            BranchArg::Rear => Branch::Rear,
        }
    }
}

#[derive(Args)]
struct FillArgs {
    #[arg(long, value_enum)]
    branch: BranchArg,
    /// Regulator set point; the manifest value when omitted.
    #[arg(long, value_parser = quantity(Dimension::Pressure))]
    upstream: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    /// Initial fill fraction.
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    /// Target time for the error figure, in seconds.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinUpstreamArgs {
    /// Fill deadline in seconds.
    #[arg(long, default_value_t = 60.0)]
    deadline: f64,
    /// Bladder settle pressure; the manifest value when omitted.
    #[arg(long, value_parser = quantity(Dimension::Pressure))]
    settle: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GaitArg {
    Screwing,
    Wheeling,
    Sidewinding,
}

#[derive(Args)]
struct GaitArgs {
    #[arg(long, value_enum)]
    mode: GaitArg,
    /// Screw speed, e.g. "20 rad/s".
    #[arg(long, value_parser = quantity(Dimension::AngularVelocity), default_value = "0 rad/s")]
    screw_speed: f64,
    /// Turning radius for screwing; straight when omitted.
    #[arg(long, value_parser = quantity(Dimension::Length), allow_hyphen_values = true)]
    radius: Option<f64>,
    #[arg(long, value_parser = quantity(Dimension::Velocity), default_value = "0.5 m/s")]
    ground_speed: f64,
    #[arg(long, default_value_t = 0.0)]
    slip: f64,
    #[arg(long, value_parser = quantity(Dimension::Angle), default_value = "20 deg")]
    pitch_amplitude: f64,
    #[arg(long, value_parser = quantity(Dimension::Angle), default_value = "40 deg")]
    yaw_amplitude: f64,
    #[arg(long, value_parser = quantity(Dimension::Frequency), default_value = "0.5 Hz")]
    frequency: f64,
    #[arg(long, value_parser = quantity(Dimension::Angle), default_value = "45 deg")]
    phase_lag: f64,
    /// Emit the single command at this time as JSON instead of a CSV series.
    #[arg(long, value_parser = quantity(Dimension::Time))]
    t: Option<f64>,
    #[arg(long, value_parser = quantity(Dimension::Time), default_value = "4 s")]
    duration: f64,
    #[arg(long, value_parser = quantity(Dimension::Time), default_value = "0.1 s")]
    step: f64,
}

#[derive(Args)]
struct HysteresisArgs {
    /// Load on the joint, e.g. "6.25 lbs".
    #[arg(long, value_parser = quantity(Dimension::Mass), default_value = "0 kg")]
    load: f64,
    #[arg(long, value_parser = quantity(Dimension::Angle), default_value = "30 deg")]
    amplitude: f64,
    #[arg(long, default_value_t = 3)]
    cycles: usize,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    /// Print loop width and area instead of the CSV sweep.
    #[arg(long)]
    summary: bool,
}

#[derive(Args)]
struct DrivetrainArgs {
    #[arg(long, value_parser = quantity(Dimension::AngularVelocity), default_value = "50 rad/s")]
    speed: f64,
    /// Motor torque; the manifest maximum when omitted.
    #[arg(long, value_parser = quantity(Dimension::Torque))]
    torque: Option<f64>,
}

#[derive(Args)]
struct CommsArgs {
    /// Chain length; the manifest value when omitted.
    #[arg(long)]
    nodes: Option<usize>,
    /// Uniform jitter bound, e.g. "0.1ms".
    #[arg(long, value_parser = quantity(Dimension::Time))]
    jitter: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Control loop rate in Hz.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    #[arg(long, value_parser = quantity(Dimension::Time), default_value = "10 s")]
    duration: f64,
    /// Poll every node each period instead of only the farthest.
    #[arg(long)]
    all_nodes: bool,
    /// Write the per-frame log as CSV.
    #[arg(long)]
    frames: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    /// Draw per segment in watts, head first; one value applies to all.
    #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
    draw: Vec<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long, default_value_t = 10.0)]
    tick_rate: f64,
    /// Write each session's command/telemetry log here when it closes.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Replay a recorded log headless, verify it, and exit.
    #[arg(long, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0, hide = true)]
    speedup: f64,
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn load(path: Option<&Path>) -> Result<RobotAssembly> {
    let assembly = match path {
        Some(p) => load_assembly_file(p).with_context(|| format!("loading {}", p.display()))?,
        None => default_assembly(),
    };
    for w in &assembly.warnings {
        eprintln!("warning: {w}");
    }
    Ok(assembly)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let assembly_path = cli.assembly.as_deref();
    match cli.command {
        Cmd::BuoyancyReport(a) => buoyancy_report(&load(assembly_path)?, &a),
        Cmd::BladderDesign(a) => bladder_design(&load(assembly_path)?, &a),
        Cmd::PneumaticFill(a) => pneumatic_fill(&load(assembly_path)?, &a),
        Cmd::MinUpstream(a) => {
            let assembly = load(assembly_path)?;
            let settle = a.settle.unwrap_or(assembly.bladder.settle_pressure_gauge_pa());
            let p = min_upstream_pressure(&assembly, settle, a.deadline, a.dt)?;
            println!("{:.1} Pa ({:.3} psi gauge)", p, p / PA_PER_PSI);
            Ok(())
        }
        Cmd::Gait(a) => gait(&load(assembly_path)?, &a),
        Cmd::HysteresisSweep(a) => {
            let assembly = load(assembly_path)?;
            let sweep = hysteresis_sweep(&assembly.hysteresis, a.load, a.amplitude, a.cycles, a.samples)?;
            if !a.summary {
                let mut out = String::from("command_deg,actual_deg\n");
                for (c, y) in &sweep {
                    out.push_str(&format!("{},{}\n", c.to_degrees(), y.to_degrees()));
                }
                emit(None, &out)
            } else {
                let width = loop_width(&sweep).context("sweep never crossed zero")?;
                println!("load_kg      {:.4}", a.load);
                println!("width_deg    {:.4}", width.to_degrees());
                println!("model_deg    {:.4}", assembly.hysteresis.width_rad(a.load).to_degrees());
                println!("area_deg2    {:.4}", loop_area(&sweep, a.samples).to_degrees().to_degrees());
                Ok(())
            }
        }
        Cmd::Drivetrain(a) => {
            let assembly = load(assembly_path)?;
            let d = &assembly.drivetrain;
            let torque = a.torque.unwrap_or(d.motor_max_torque_nm);
            let out = screw_output(torque, a.speed, d)?;
            println!("speed_rad_s        {:.3}", a.speed);
            println!("shell_torque_nm    {:.4}", out.shell_torque_nm);
            println!("tangential_force_n {:.3}", out.tangential_force_n);
            println!("ideal_torque_nm    {:.4}", d.ideal_shell_torque_nm(torque));
            println!("efficiency_pct     {:.2}", 100.0 * out.efficiency);
            if out.extrapolated {
                eprintln!("warning: speed below the measured range; force extrapolated");
            }
            Ok(())
        }
        Cmd::Comms(a) => comms(&load(assembly_path)?, &a),
        Cmd::Simulate(a) => simulate(&load(assembly_path)?, &a),
        Cmd::PowerBudget(a) => {
            let assembly = load(assembly_path)?;
            let draws = if a.draw.len() == 1 {
                vec![a.draw[0]; assembly.segments.len()]
            } else {
                a.draw.clone()
            };
            let report = power_budget_check(&assembly, &draws)?;
            for s in &report.segments {
                println!(
                    "{:<16} {:>8.1} W / {:>6.1} W  {}",
                    s.segment,
                    s.draw_w,
                    s.limit_w,
                    if s.pass { "pass" } else { "FAIL" }
                );
            }
            println!(
                "{:<16} {:>8.1} W / {:>6.1} W  {}",
                "system",
                report.system_draw_w,
                report.system_limit_w,
                if report.system_pass { "pass" } else { "FAIL" }
            );
            if !report.pass() {
                bail!("power budget exceeded");
            }
            Ok(())
        }
        Cmd::Calibrate(a) => {
            let assembly = load(assembly_path)?;
            let targets = CalibrationTargets {
                dt_s: a.dt,
                ..CalibrationTargets::default()
            };
            let r = calibrate(&assembly, &targets)?;
            println!("# paste into the manifest");
            println!("# front: fill_resistance = \"{:.6e} Pa s/m3\"", r.front_fill_resistance);
            println!("# front: vent_resistance = \"{:.6e} Pa s/m3\"", r.front_vent_resistance);
            println!("# rear:  fill_resistance = \"{:.6e} Pa s/m3\"", r.rear_fill_resistance);
            println!("# rear:  vent_resistance = \"{:.6e} Pa s/m3\"", r.rear_vent_resistance);
            println!("[hydro]");
            println!("drag_coefficient = \"{:.6} N s2/m2\"", r.drag_coefficient);
            println!("added_mass = \"{:.6} kg\"", r.added_mass_kg);
            println!(
                "# descent: {:.4} m/s2 over window, {:.2} s total; ascent: {:.4} m/s2, {:.2} s; {} iterations",
                r.descent.mean_acceleration_m_s2,
                r.descent.duration_s,
                r.ascent.mean_acceleration_m_s2,
                r.ascent.duration_s,
                r.iterations
            );
            Ok(())
        }
        Cmd::Serve(a) => serve(load(assembly_path)?, a),
    }
}

fn buoyancy_report(assembly: &RobotAssembly, a: &BuoyancyArgs) -> Result<()> {
    let front = a.fill_front.unwrap_or(a.fill);
    let rear = a.fill_rear.unwrap_or(a.fill);
    for f in [front, rear] {
        if !(0.0..=1.0).contains(&f) {
            bail!("fill fraction {f} outside [0, 1]");
        }
    }
    let report = assembly_buoyancy_report(assembly, &fill_by_branch(assembly, front, rear))?;
    if a.csv {
        return emit(None, &report.to_csv());
    }
    println!(
        "{:<28} {:>10} {:>10} {:>10} {:>8}  class",
        "item", "weight_n", "buoyant_n", "net_n", "fraction"
    );
    for r in &report.rows {
        println!(
            "{:<28} {:>10.3} {:>10.3} {:>10.3} {:>8.3}  {}",
            r.item,
            r.weight_n,
            r.buoyant_force_n,
            r.net_force_n,
            r.buoyancy_fraction,
            r.classification.as_str()
        );
    }
    println!(
        "{:<28} {:>10.3} {:>10.3} {:>10.3} {:>8}  {}",
        "total",
        report.total_weight_n,
        report.total_buoyant_force_n,
        report.total_net_force_n,
        "",
        report.classification().as_str()
    );
    println!("pitch moment {:.3} N m (head up positive)", report.pitch_moment_nm);
    Ok(())
}

fn bladder_design(assembly: &RobotAssembly, a: &BladderArgs) -> Result<()> {
    let target = match (&a.segment, a.target_volume) {
        (Some(name), _) => {
            let mut seg = assembly
                .segments
                .iter()
                .find(|s| &s.name == name)
                .with_context(|| format!("no segment named '{name}'"))?
                .clone();
            seg.bladder_slots = 0;
            let report = segments_buoyancy_report(
                std::slice::from_ref(&seg),
                &assembly.bladder,
                &assembly.environment,
                assembly.joints.segment_length_m,
                &[],
            )?;
            let req = required_bladder_force(&report.rows, a.margin, a.buffer)?;
            let v = bladder_volume_for_force(req.buffered_n, assembly.bladder.empty_mass_kg(), &assembly.environment)?;
            println!("deficit_n          {:.3}", req.deficit_n);
            println!("setpoint_n         {:.3}", req.setpoint_n);
            println!("buffered_n         {:.3}", req.buffered_n);
            v
        }
        (None, Some(v)) => v,
        (None, None) => bail!("give --target-volume or --segment"),
    };
    let minor = solve_bladder_geometry(target, a.major, assembly.dimensions.system_max_diameter_m)?;
    let pattern = flat_pattern_with_seam(a.major, minor, a.seam)?;
    println!("volume_m3          {:.6}", target);
    println!("major_diameter_m   {:.5}", a.major);
    println!("minor_diameter_m   {:.5}", minor);
    println!("check_volume_m3    {:.6}", torus_volume(minor, a.major)?);
    println!("outer_textile_m    {:.5}", pattern.outer_textile_diameter_m);
    println!("inner_textile_m    {:.5}", pattern.inner_textile_diameter_m);
    if a.seam > 0.0 {
        println!("cut_outer_m        {:.5}", pattern.cut_outer_diameter_m());
        println!("cut_inner_m        {:.5}", pattern.cut_inner_diameter_m());
    }
    Ok(())
}

fn pneumatic_fill(assembly: &RobotAssembly, a: &FillArgs) -> Result<()> {
    let network = match a.upstream {
        Some(p) => assembly.pneumatics.with_regulator(p),
        None => assembly.pneumatics.clone(),
    };
    let branch: Branch = a.branch.into();
    let plant = BranchPlant::with_network(assembly, &network, branch)?;
    if !(0.0..=1.0).contains(&a.from) {
        bail!("--from must be a fraction in [0, 1]");
    }
    let trace = simulate_fill_from(
        &plant,
        a.from * plant.full_volume_m3,
        ValveState::Fill,
        a.dt,
        DEFAULT_FILL_HORIZON_S,
    )?;
    emit(a.out.as_deref(), &trace.to_csv())?;
    let spec = network.branch(branch).context("branch missing")?;
    let drop = spec.tube_pressure_drop_pa(trace.peak_flow_m3_s(), network.air_density_kg_m3, assembly.environment.gravity_m_s2)?;
    match trace.completion_s {
        Some(t) => {
            eprintln!("{branch} branch full after {t:.2} s at {:.3} psi", plant.upstream_pa / PA_PER_PSI);
            if let Some(target) = a.target {
                eprintln!("error vs {target} s target: {:.1}%", 100.0 * inflation_error_vs_target(t, target)?);
            }
        }
        None => eprintln!("{branch} branch did not fill within {DEFAULT_FILL_HORIZON_S} s"),
    }
    eprintln!("tube pressure drop at peak flow: {drop:.1} Pa");
    Ok(())
}

fn gait(assembly: &RobotAssembly, a: &GaitArgs) -> Result<()> {
    let mode = match a.mode {
        GaitArg::Screwing => GaitMode::Screwing {
            turn_radius_m: a.radius,
            screw_speed_rad_s: a.screw_speed,
        },
        GaitArg::Wheeling => GaitMode::Wheeling {
            ground_speed_m_s: a.ground_speed,
            slip: a.slip,
        },
        GaitArg::Sidewinding => GaitMode::Sidewinding(SidewindingParams {
            amplitude_pitch_rad: a.pitch_amplitude,
            amplitude_yaw_rad: a.yaw_amplitude,
            frequency_hz: a.frequency,
            phase_lag_rad: a.phase_lag,
            screw_speed_rad_s: a.screw_speed,
        }),
    };
    let segments = assembly.segments.len();
    if let Some(t) = a.t {
        let cmd = mode.command(t, segments, &assembly.joints, &assembly.drivetrain)?;
        println!("{}", serde_json::to_string_pretty(&cmd)?);
        return Ok(());
    }
    if !(a.step > 0.0) {
        bail!("--step must be positive");
    }
    let joints = assembly.joint_count();
    let mut out = String::from("t_s");
    for j in 0..joints {
        out.push_str(&format!(",pitch{j}_deg,yaw{j}_deg"));
    }
    for s in 0..segments {
        out.push_str(&format!(",screw{s}_rad_s"));
    }
    out.push('\n');
    let n = (a.duration / a.step).round() as usize;
    for k in 0..=n {
        let t = k as f64 * a.step;
        let cmd = mode.command(t, segments, &assembly.joints, &assembly.drivetrain)?;
        out.push_str(&format!("{t}"));
        for j in &cmd.joints {
            out.push_str(&format!(",{},{}", j.pitch_rad.to_degrees(), j.yaw_rad.to_degrees()));
        }
        for s in &cmd.screw_speeds_rad_s {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
    }
    emit(None, &out)
}

fn comms(assembly: &RobotAssembly, a: &CommsArgs) -> Result<()> {
    let mut topology = assembly.bus;
    if let Some(n) = a.nodes {
        topology.nodes = n;
    }
    if let Some(j) = a.jitter {
        let bound_ns = snakeforge_core::comms::s_to_ns(j)?;
        topology.jitter = if bound_ns == 0 {
            Jitter::None
        } else {
            Jitter::Uniform { bound_ns }
        };
    }
    let schedule: Vec<CommandStream> = if a.all_nodes {
        (1..=topology.nodes)
            .map(|node| CommandStream {
                node,
                rate_hz: a.rate,
                payload_bytes: 8,
            })
            .collect()
    } else {
        vec![CommandStream {
            node: topology.nodes,
            rate_hz: a.rate,
            payload_bytes: 8,
        }]
    };
    let sim = run_event_simulation(&topology, &schedule, a.duration, a.seed)?;
    println!(
        "{:>5} {:>10} {:>8} {:>12} {:>12} {:>12}",
        "node", "model_ms", "frames", "mean_rtt_ms", "max_rtt_ms", "mean_queue_ms"
    );
    for s in &sim.stats {
        println!(
            "{:>5} {:>10.3} {:>8} {:>12.4} {:>12.4} {:>12.4}",
            s.node,
            1e3 * round_trip_latency(&topology, s.node)?,
            s.frames,
            1e3 * s.mean_rtt_s,
            1e3 * s.max_rtt_s,
            1e3 * s.mean_queueing_s
        );
    }
    println!("max control rate  {:.1} Hz", max_control_rate(&topology)?);
    println!("bus utilization   {:.3}", sim.utilization);
    println!("missed deadlines  {} of {}", sim.missed_deadlines, sim.frames.len());
    if let Some(o) = sim.overload {
        eprintln!(
            "warning: overload, schedule needs {:.2}x the bus capacity (peak backlog {})",
            o.utilization, o.peak_backlog
        );
    }
    if let Some(path) = &a.frames {
        emit(Some(path), &sim.frames_csv())?;
    }
    Ok(())
}

fn simulate(assembly: &RobotAssembly, a: &SimulateArgs) -> Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let run = run_scenario(assembly, &scenario, a.dt)?;
    if let Some(out) = &a.out {
        emit(Some(out), &run.to_csv())?;
    }
    match &run.outcome {
        TraverseOutcome::Completed(s) => {
            println!("scenario           {}", scenario.name);
            println!("duration_s         {:.3}", s.duration_s);
            println!("onset_s            {:.3}", s.onset_s);
            println!("mean_accel_m_s2    {:.5}", s.mean_acceleration_m_s2);
            println!("window_s           {:.3}..{:.3}", s.window_s.0, s.window_s.1);
            println!("peak_speed_m_s     {:.4}", s.peak_speed_m_s);
        }
        TraverseOutcome::NonTerminating { horizon_s, diagnosis } => {
            println!("scenario           {}", scenario.name);
            println!("horizon_s          {horizon_s:.3}");
            println!("outcome            {diagnosis}");
        }
    }
    Ok(())
}

fn serve(assembly: RobotAssembly, a: ServeArgs) -> Result<()> {
    if let Some(path) = &a.replay {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let log = SessionLog::from_jsonl(&text)?;
        let recorded = serialize_records(log.telemetry());
        let replayed = serialize_records(&replay(&assembly, &log)?);
        if let Some(i) = recorded.iter().zip(&replayed).position(|(a, b)| a != b) {
            bail!("replay diverges at record {i}");
        }
        if recorded.len() != replayed.len() {
            bail!("replay produced {} records, log has {}", replayed.len(), recorded.len());
        }
        println!("replay identical: {} telemetry records", recorded.len());
        return Ok(());
    }
    if !(a.speedup > 0.0) {
        bail!("--speedup must be positive");
    }
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let config = ServiceConfig {
        assembly,
        tick_rate_hz: a.tick_rate,
        speedup: a.speedup,
        initial: InitialConditions::default(),
        record: a.record,
    };
    snakeforge_core::sim::World::new(config.assembly.clone(), config.tick_rate_hz, config.initial.clone())?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = service::bind(a.bind).await?;
        service::serve(listener, config).await
    })
}
