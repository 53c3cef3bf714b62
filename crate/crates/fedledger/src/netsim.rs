//! Discrete-event network simulator for lossy vehicular links.
//!
//! Messages are injected with a send time; the link model decides drop and
//! delay per message from a seeded stream, so a given (scenario, seed) pair
//! replays exactly. Events are ordered by (time, insertion sequence), which
//! keeps simultaneous events deterministic. Counters advance when events are
//! processed, and cumulative metrics are sampled at every whole second of
//! simulated time.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetSimError {
    #[error("node {0} is not registered")]
    UnknownNode(String),
    #[error("time {got} is before the simulator clock {now}")]
    TimeRegression { got: f64, now: f64 },
    #[error("invalid link model: {0}")]
    InvalidLink(String),
}

/// Per-message link behaviour: drop chance, uniform delay range, and the
/// fixed framing overhead added on top of the payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub drop_probability: f64,
    pub delay_ms: (f64, f64),
    pub overhead_bytes_per_msg: u64,
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), NetSimError> {
        let (lo, hi) = self.delay_ms;
        if !(self.drop_probability >= 0.0 && self.drop_probability <= 1.0) {
            return Err(NetSimError::InvalidLink(format!(
                "drop probability {} outside [0, 1]",
                self.drop_probability
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(NetSimError::InvalidLink(format!("bad delay range ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    ModelDownload,
    UpdateUpload,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub src: String,
    pub dst: String,
    pub payload_bytes: u64,
    pub kind: MessageKind,
    pub send_time: f64,
}

/// What `send` decided for a message: its future delivery time, or a drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SendOutcome {
    Scheduled { deliver_time: f64 },
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveredMessage {
    pub message: Message,
    pub deliver_time: f64,
}

/// Cumulative link metrics at one whole second of simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetSample {
    pub second: u64,
    pub pdr: f64,
    pub overhead_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetMetrics {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub pdr: f64,
    pub overhead_ratio: f64,
    pub series: Vec<NetSample>,
}

#[derive(Debug, Clone)]
enum EventKind {
    Send { message: Message, fate: SendOutcome },
    Deliver { message: Message },
}

#[derive(Debug, Clone)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the BinaryHeap pops the earliest (time, seq) first.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct NetSim {
    link: LinkModel,
    rng: ChaCha8Rng,
    nodes: BTreeSet<String>,
    queue: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
    sent: u64,
    delivered: u64,
    dropped: u64,
    payload_bytes_sent: u64,
    overhead_bytes_sent: u64,
    next_sample_second: u64,
    series: Vec<NetSample>,
    delivered_log: Vec<DeliveredMessage>,
}

impl NetSim {
    pub fn new(
        link: LinkModel,
        seed: u64,
        nodes: impl IntoIterator<Item = String>,
    ) -> Result<Self, NetSimError> {
        link.validate()?;
        Ok(Self {
            link,
            rng: ChaCha8Rng::seed_from_u64(seed),
            nodes: nodes.into_iter().collect(),
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
            sent: 0,
            delivered: 0,
            dropped: 0,
            payload_bytes_sent: 0,
            overhead_bytes_sent: 0,
            next_sample_second: 1,
            series: Vec::new(),
            delivered_log: Vec::new(),
        })
    }

    pub fn add_node(&mut self, id: impl Into<String>) {
        self.nodes.insert(id.into());
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Queues a message and decides its fate immediately. Drop and delay are
    /// both drawn for every message, so the random stream does not depend on
    /// which branch was taken.
    pub fn send(&mut self, message: Message) -> Result<SendOutcome, NetSimError> {
        for node in [&message.src, &message.dst] {
            if !self.nodes.contains(node) {
                return Err(NetSimError::UnknownNode(node.clone()));
            }
        }
        if !(message.send_time >= self.now) {
            return Err(NetSimError::TimeRegression { got: message.send_time, now: self.now });
        }
        let drop_draw: f64 = rand::RngExt::random(&mut self.rng);
        let delay_draw: f64 = rand::RngExt::random(&mut self.rng);
        let (lo, hi) = self.link.delay_ms;
        let fate = if drop_draw < self.link.drop_probability {
            SendOutcome::Dropped
        } else {
            SendOutcome::Scheduled {
                deliver_time: message.send_time + lo + delay_draw * (hi - lo),
            }
        };
        self.push_event(message.send_time, EventKind::Send { message, fate });
        Ok(fate)
    }

    fn push_event(&mut self, time: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event { time, seq, kind });
    }

    /// Processes every event up to and including `t_end`, emits the samples
    /// whose second boundaries were passed, and advances the clock to `t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<NetMetrics, NetSimError> {
        if !(t_end >= self.now) {
            return Err(NetSimError::TimeRegression { got: t_end, now: self.now });
        }
        while let Some(head) = self.queue.peek() {
            if head.time > t_end {
                break;
            }
            let event = self.queue.pop().expect("peeked event");
            // Events landing exactly on a boundary belong to that boundary's
            // sample, so only emit for boundaries strictly before this event.
            self.emit_samples_before(event.time);
            self.now = event.time;
            match event.kind {
                EventKind::Send { message, fate } => {
                    self.sent += 1;
                    self.payload_bytes_sent += message.payload_bytes;
                    self.overhead_bytes_sent += self.link.overhead_bytes_per_msg;
                    match fate {
                        SendOutcome::Dropped => self.dropped += 1,
                        SendOutcome::Scheduled { deliver_time } => {
                            self.push_event(deliver_time, EventKind::Deliver { message });
                        }
                    }
                }
                EventKind::Deliver { message } => {
                    self.delivered += 1;
                    self.delivered_log.push(DeliveredMessage { message, deliver_time: event.time });
                }
            }
        }
        while (self.next_sample_second * 1000) as f64 <= t_end {
            self.emit_sample();
        }
        self.now = t_end;
        Ok(self.metrics())
    }

    fn emit_samples_before(&mut self, t: f64) {
        while ((self.next_sample_second * 1000) as f64) < t {
            self.emit_sample();
        }
    }

    fn emit_sample(&mut self) {
        let sample = NetSample {
            second: self.next_sample_second,
            pdr: self.pdr(),
            overhead_ratio: self.overhead_ratio(),
        };
        self.series.push(sample);
        self.next_sample_second += 1;
    }

    fn pdr(&self) -> f64 {
        if self.sent == 0 {
            1.0
        } else {
            self.delivered as f64 / self.sent as f64
        }
    }

    fn overhead_ratio(&self) -> f64 {
        let total = self.payload_bytes_sent + self.overhead_bytes_sent;
        if total == 0 {
            0.0
        } else {
            self.overhead_bytes_sent as f64 / total as f64
        }
    }

    pub fn metrics(&self) -> NetMetrics {
        NetMetrics {
            sent: self.sent,
            delivered: self.delivered,
            dropped: self.dropped,
            pdr: self.pdr(),
            overhead_ratio: self.overhead_ratio(),
            series: self.series.clone(),
        }
    }

    /// Hands over the messages delivered since the last drain, in delivery
    /// order.
    pub fn drain_delivered(&mut self) -> Vec<DeliveredMessage> {
        std::mem::take(&mut self.delivered_log)
    }
}

/// Seconds of the default scenario ignored before judging steady-state
/// overhead.
pub const DEFAULT_SCENARIO_WARMUP_S: u64 = 17;

/// Reference scenario: one roadside unit and one vehicle exchanging ten
/// 100-byte control messages per second for 100 seconds over a link with
/// 20% drops, 10..50 ms delay, and 30 bytes framing per message.
pub fn run_default_scenario(seed: u64) -> NetMetrics {
    let link = LinkModel {
        drop_probability: 0.2,
        delay_ms: (10.0, 50.0),
        overhead_bytes_per_msg: 30,
    };
    let mut sim = NetSim::new(link, seed, ["rsu-0".to_string(), "veh-0".to_string()])
        .expect("valid reference link");
    for second in 0..100u64 {
        for slot in 0..10u64 {
            sim.send(Message {
                src: "veh-0".into(),
                dst: "rsu-0".into(),
                payload_bytes: 100,
                kind: MessageKind::Control,
                send_time: (second * 1000 + slot * 100) as f64,
            })
            .expect("scenario nodes registered");
        }
    }
    sim.run_until(101_000.0).expect("forward clock")
}
