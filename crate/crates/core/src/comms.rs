//! Round-trip latency on the daisy-chained CAN bus.
//!
//! Each node adds a fixed store-and-forward cost, so the round trip to the
//! n-th node is affine in n. Times are integer nanoseconds inside the
//! simulator so that zero-jitter runs reproduce the model exactly.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

pub const DEFAULT_FIRST_HOP_NS: u64 = 730_000;
pub const DEFAULT_INCREMENT_NS: u64 = 910_000;
pub const DEFAULT_NODE_COUNT: usize = 10;

const NS_PER_S: f64 = 1.0e9;

pub fn ns_to_s(ns: u64) -> f64 {
    ns as f64 / NS_PER_S
}

pub fn s_to_ns(s: f64) -> Result<u64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::arg("time", format!("{s} s must be finite and non-negative")));
    }
    Ok((s * NS_PER_S).round() as u64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Jitter {
    #[default]
    None,
    /// Uniform on `[-bound, +bound]`.
    Uniform { bound_ns: u64 },
}

impl Jitter {
    pub fn bound_ns(self) -> u64 {
        match self {
            Jitter::None => 0,
            Jitter::Uniform { bound_ns } => bound_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusTopology {
    pub nodes: usize,
    pub first_hop_ns: u64,
    pub increment_ns: u64,
    pub jitter: Jitter,
}

impl Default for BusTopology {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODE_COUNT,
            first_hop_ns: DEFAULT_FIRST_HOP_NS,
            increment_ns: DEFAULT_INCREMENT_NS,
            jitter: Jitter::None,
        }
    }
}

impl BusTopology {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        if self.nodes == 0 {
            errors.push(FieldError::new("bus.nodes", "at least one node is required"));
        }
        if self.first_hop_ns == 0 {
            errors.push(FieldError::new("bus.first_hop", "must be positive"));
        }
        if self.increment_ns == 0 {
            errors.push(FieldError::new("bus.increment", "must be positive"));
        }
        if self.jitter.bound_ns() >= self.first_hop_ns {
            errors.push(FieldError::new(
                "bus.jitter",
                "bound must be smaller than the first-hop latency",
            ));
        }
        errors
    }

    /// Model round trip to node `index` (1-based), without jitter.
    pub fn latency_ns(&self, index: usize) -> Result<u64> {
        if index == 0 || index > self.nodes {
            return Err(Error::OutOfRange {
                what: "node",
                index,
                max: self.nodes,
            });
        }
        Ok(self.first_hop_ns + (index as u64 - 1) * self.increment_ns)
    }

    fn sample_latency_ns(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<u64> {
        let base = self.latency_ns(index)? as i64;
        let jitter = match self.jitter {
            Jitter::None => 0,
            Jitter::Uniform { bound_ns } => {
                let b = bound_ns as i64;
                rng.random_range(-b..=b)
            }
        };
        Ok((base + jitter).max(1) as u64)
    }
}

/// Model round trip to node `index`, in seconds.
pub fn round_trip_latency(topology: &BusTopology, index: usize) -> Result<f64> {
    Ok(ns_to_s(topology.latency_ns(index)?))
}

/// Fastest loop that completes a worst-case round trip to the farthest node
/// every period.
pub fn max_control_rate(topology: &BusTopology) -> Result<f64> {
    let worst = topology.latency_ns(topology.nodes)? + topology.jitter.bound_ns();
    Ok(NS_PER_S / worst as f64)
}

/// A periodic stream of commands to one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandStream {
    pub node: usize,
    pub rate_hz: f64,
    pub payload_bytes: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Frame {
    pub stream: usize,
    pub node: usize,
    pub payload_bytes: u8,
    pub enqueue_ns: u64,
    pub start_ns: u64,
    pub completion_ns: u64,
}

impl Frame {
    pub fn round_trip_ns(&self) -> u64 {
        self.completion_ns - self.start_ns
    }

    pub fn queueing_ns(&self) -> u64 {
        self.start_ns - self.enqueue_ns
    }

    pub fn response_ns(&self) -> u64 {
        self.completion_ns - self.enqueue_ns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeStats {
    pub node: usize,
    pub frames: usize,
    pub mean_rtt_s: f64,
    pub max_rtt_s: f64,
    pub mean_queueing_s: f64,
    pub max_queueing_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overload {
    /// Fraction of bus time the schedule asks for; above 1 the queue grows
    /// without bound.
    pub utilization: f64,
    pub peak_backlog: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSimulation {
    pub frames: Vec<Frame>,
    pub stats: Vec<NodeStats>,
    /// Frames whose enqueue-to-completion time exceeded their stream period.
    pub missed_deadlines: usize,
    pub utilization: f64,
    pub overload: Option<Overload>,
}

impl EventSimulation {
    pub fn frames_csv(&self) -> String {
        let mut out = String::from("stream,node,enqueue_s,start_s,completion_s,rtt_s,queueing_s\n");
        for f in &self.frames {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                f.stream,
                f.node,
                ns_to_s(f.enqueue_ns),
                ns_to_s(f.start_ns),
                ns_to_s(f.completion_ns),
                ns_to_s(f.round_trip_ns()),
                ns_to_s(f.queueing_ns()),
            );
        }
        out
    }
}

/// Serves every scheduled command over the shared bus, first come first
/// served, one frame in flight at a time.
pub fn run_event_simulation(
    topology: &BusTopology,
    schedule: &[CommandStream],
    duration_s: f64,
    seed: u64,
) -> Result<EventSimulation> {
    let errors = topology.validate();
    if !errors.is_empty() {
        return Err(Error::Invalid(errors));
    }
    let duration_ns = s_to_ns(duration_s)?;
    let mut periods = Vec::with_capacity(schedule.len());
    let mut utilization = 0.0;
    for s in schedule {
        if !(s.rate_hz > 0.0 && s.rate_hz.is_finite()) {
            return Err(Error::arg("rate", format!("{} Hz must be positive", s.rate_hz)));
        }
        let period = (NS_PER_S / s.rate_hz).round() as u64;
        if period == 0 {
            return Err(Error::arg("rate", format!("{} Hz is too fast", s.rate_hz)));
        }
        utilization += topology.latency_ns(s.node)? as f64 / period as f64;
        periods.push(period);
    }

    // (enqueue time, stream) for every command, in service order.
    let mut arrivals: Vec<(u64, usize)> = Vec::new();
    for (i, &period) in periods.iter().enumerate() {
        let mut t = 0;
        while t < duration_ns {
            arrivals.push((t, i));
            t += period;
        }
    }
    arrivals.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(arrivals.len());
    let mut bus_free_ns = 0u64;
    let mut missed_deadlines = 0;
    let mut peak_backlog = 0;
    let mut in_system: std::collections::VecDeque<u64> = std::collections::VecDeque::new();
    for &(enqueue_ns, stream) in &arrivals {
        let cmd = &schedule[stream];
        while in_system.front().is_some_and(|&c| c <= enqueue_ns) {
            in_system.pop_front();
        }
        let start_ns = enqueue_ns.max(bus_free_ns);
        let completion_ns = start_ns + topology.sample_latency_ns(cmd.node, &mut rng)?;
        bus_free_ns = completion_ns;
        in_system.push_back(completion_ns);
        peak_backlog = peak_backlog.max(in_system.len());
        if completion_ns - enqueue_ns > periods[stream] {
            missed_deadlines += 1;
        }
        frames.push(Frame {
            stream,
            node: cmd.node,
            payload_bytes: cmd.payload_bytes,
            enqueue_ns,
            start_ns,
            completion_ns,
        });
    }

    let mut stats = Vec::new();
    for node in 1..=topology.nodes {
        let of_node: Vec<&Frame> = frames.iter().filter(|f| f.node == node).collect();
        if of_node.is_empty() {
            continue;
        }
        let n = of_node.len() as f64;
        let rtt_sum: u128 = of_node.iter().map(|f| f.round_trip_ns() as u128).sum();
        let queue_sum: u128 = of_node.iter().map(|f| f.queueing_ns() as u128).sum();
        stats.push(NodeStats {
            node,
            frames: of_node.len(),
            mean_rtt_s: rtt_sum as f64 / n / NS_PER_S,
            max_rtt_s: ns_to_s(of_node.iter().map(|f| f.round_trip_ns()).max().unwrap_or(0)),
            mean_queueing_s: queue_sum as f64 / n / NS_PER_S,
            max_queueing_s: ns_to_s(of_node.iter().map(|f| f.queueing_ns()).max().unwrap_or(0)),
        });
    }
    let overload = (utilization > 1.0).then_some(Overload {
        utilization,
        peak_backlog,
    });
    Ok(EventSimulation {
        frames,
        stats,
        missed_deadlines,
        utilization,
        overload,
    })
}
