//! Congestion-control models that drive the greedy flows.
//!
//! The models are class representatives rather than kernel ports: `reno`
//! and `cubic` are loss-based, `vegas` and `copa` are delay-based, `bbr` is a
//! hybrid that paces at its bottleneck-bandwidth estimate. The transport
//! machinery (sequence numbers, SACK scoreboard, retransmission timer) lives
//! in the emulator; a model only sees [`AckSample`]s and loss signals and
//! answers with a [`SendBudget`].

mod bbr;
mod copa;
mod cubic;
pub mod delayed_ack;
mod reno;
pub mod trace;
mod vegas;

use serde::{Deserialize, Serialize};

pub use bbr::Bbr;
pub use copa::Copa;
pub use cubic::Cubic;
pub use delayed_ack::{AckDecision, DelayedAck, DELAYED_ACK_TIMEOUT_NS};
pub use reno::Reno;
pub use trace::{SchemeTrace, TraceSample};
pub use vegas::Vegas;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    /// Cumulative acknowledgments with SACK, retransmissions and delayed acks.
    Tcp,
    /// One feedback datagram per data datagram, no retransmissions.
    Udp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeClass {
    LossBased,
    DelayBased,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeDescriptor {
    pub name: &'static str,
    pub class: SchemeClass,
    pub transport: Transport,
    /// Receiver acknowledges pairs of segments (TCP only).
    pub delayed_ack: bool,
    pub summary: &'static str,
}

const REGISTRY: [SchemeDescriptor; 5] = [
    SchemeDescriptor {
        name: "cubic",
        class: SchemeClass::LossBased,
        transport: Transport::Tcp,
        delayed_ack: true,
        summary: "cubic window growth around the last loss point, multiplicative decrease by beta",
    },
    SchemeDescriptor {
        name: "reno",
        class: SchemeClass::LossBased,
        transport: Transport::Tcp,
        delayed_ack: true,
        summary: "additive increase of one packet per round trip, halving on loss",
    },
    SchemeDescriptor {
        name: "vegas",
        class: SchemeClass::DelayBased,
        transport: Transport::Tcp,
        delayed_ack: true,
        summary: "keeps between alpha and beta packets queued by comparing expected and actual rate",
    },
    SchemeDescriptor {
        name: "bbr",
        class: SchemeClass::Hybrid,
        transport: Transport::Tcp,
        delayed_ack: true,
        summary: "paces at the max-filtered delivery rate and caps inflight near the estimated BDP",
    },
    SchemeDescriptor {
        name: "copa",
        class: SchemeClass::DelayBased,
        transport: Transport::Udp,
        delayed_ack: false,
        summary: "targets a rate inversely proportional to the standing queueing delay",
    },
];

pub fn registry() -> &'static [SchemeDescriptor] {
    &REGISTRY
}

pub fn lookup(name: &str) -> Option<&'static SchemeDescriptor> {
    REGISTRY.iter().find(|d| d.name == name)
}

/// Tunable model constants. These are properties of the models, not
/// measurements, and are recorded in the run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub initial_cwnd: u32,
    /// Receiver window in packets; caps packets in flight.
    pub receive_window: u32,
    pub mss: u32,
    pub cubic_c: f64,
    pub cubic_beta: f64,
    /// Hybrid slow start for the cubic model.
    pub cubic_hystart: bool,
    pub vegas_alpha: f64,
    pub vegas_beta: f64,
    pub vegas_gamma: f64,
    pub bbr_bw_window_rounds: u32,
    pub bbr_min_rtt_window_ms: u64,
    pub copa_delta: f64,
    pub min_rto_ms: u64,
    pub initial_rto_ms: u64,
    pub delayed_ack_ms: u64,
    /// Per-packet transmission rate of a host's network stack in Mbit/s.
    /// Bounds how fast an unshaped host can emit packets.
    pub host_rate: f64,
    pub trace_period_ms: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            initial_cwnd: 10,
            receive_window: 4096,
            mss: 1448,
            cubic_c: 0.4,
            cubic_beta: 0.7,
            cubic_hystart: true,
            vegas_alpha: 2.0,
            vegas_beta: 4.0,
            vegas_gamma: 1.0,
            bbr_bw_window_rounds: 8,
            bbr_min_rtt_window_ms: 10_000,
            copa_delta: 0.5,
            min_rto_ms: 200,
            initial_rto_ms: 1_000,
            delayed_ack_ms: 40,
            host_rate: 10_000.0,
            trace_period_ms: 50,
        }
    }
}

/// Snapshot of a model's internal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeState {
    /// Packets; at least 1.
    pub cwnd: f64,
    pub ssthresh: f64,
    /// Smoothed RTT in nanoseconds (0 before the first sample).
    pub rtt_estimate: u64,
    /// Smallest RTT seen so far in nanoseconds (`u64::MAX` before the first sample).
    pub min_rtt: u64,
    /// Bits per second; only meaningful for pacing models.
    pub pacing_rate: Option<f64>,
    pub mode: &'static str,
}

/// Delivery-rate sample for the packet most recently sent among those this
/// acknowledgment delivered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    /// Packets delivered between that packet's send and this ack.
    pub delivered: u64,
    pub interval_ns: u64,
    /// Connection delivered count when that packet was sent.
    pub prior_delivered: u64,
    pub app_limited: bool,
}

impl RateSample {
    pub fn packets_per_sec(&self) -> f64 {
        if self.interval_ns == 0 {
            return 0.0;
        }
        self.delivered as f64 * 1e9 / self.interval_ns as f64
    }
}

/// What one acknowledgment told the sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckSample {
    pub now: u64,
    /// Packets newly delivered by this ack (cumulative plus selective).
    pub acked: u32,
    /// RTT of the newest delivered, never-retransmitted packet.
    pub rtt: Option<u64>,
    pub prior_in_flight: u32,
    pub in_flight: u32,
    /// Total packets delivered over the connection, including this ack.
    pub delivered: u64,
    /// Sequence number of the next new packet.
    pub next_seq: u64,
    /// Highest sequence number delivered by this ack.
    pub highest_acked: u64,
    pub in_recovery: bool,
    pub rate: Option<RateSample>,
}

impl AckSample {
    /// Loss-based models only grow the window when it is the limit.
    pub fn cwnd_limited(&self, cwnd: f64) -> bool {
        self.prior_in_flight as f64 + 1.0 >= cwnd.floor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SendBudget {
    /// Packets allowed in flight.
    pub cwnd: u32,
    /// Bits per second, `None` for ack-clocked sending.
    pub pacing_rate: Option<f64>,
}

pub trait CongestionControl: Send {
    fn on_ack(&mut self, ack: &AckSample) -> SendBudget;

    /// Loss detected by duplicate acknowledgments; called once per recovery
    /// episode.
    fn on_congestion(&mut self, now: u64, in_flight: u32);

    /// Retransmission timeout.
    fn on_timeout(&mut self, now: u64);

    fn on_recovery_exit(&mut self, _now: u64) {}

    fn state(&self) -> SchemeState;

    fn budget(&self) -> SendBudget {
        let s = self.state();
        SendBudget {
            cwnd: s.cwnd.max(1.0).floor() as u32,
            pacing_rate: s.pacing_rate,
        }
    }
}

/// Instantiates the model registered under `name`.
pub fn build(name: &str, params: &ModelParams) -> Option<Box<dyn CongestionControl>> {
    let cc: Box<dyn CongestionControl> = match lookup(name)?.name {
        "cubic" => Box::new(Cubic::new(params)),
        "reno" => Box::new(Reno::new(params)),
        "vegas" => Box::new(Vegas::new(params)),
        "bbr" => Box::new(Bbr::new(params)),
        "copa" => Box::new(Copa::new(params)),
        _ => return None,
    };
    Some(cc)
}

/// Exponentially weighted RTT estimate shared by the models.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RttTracker {
    pub srtt: u64,
    pub min_rtt: Option<u64>,
}

impl RttTracker {
    pub fn update(&mut self, rtt: Option<u64>) {
        if let Some(rtt) = rtt {
            self.srtt = if self.srtt == 0 { rtt } else { (self.srtt * 7 + rtt) / 8 };
            self.min_rtt = Some(self.min_rtt.map_or(rtt, |m| m.min(rtt)));
        }
    }

    pub fn min_or_max(&self) -> u64 {
        self.min_rtt.unwrap_or(u64::MAX)
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn ack(now: u64, acked: u32, rtt: u64, in_flight: u32) -> AckSample {
        AckSample {
            now,
            acked,
            rtt: Some(rtt),
            prior_in_flight: in_flight,
            in_flight: in_flight.saturating_sub(acked),
            delivered: 0,
            next_seq: 0,
            highest_acked: 0,
            in_recovery: false,
            rate: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let vegas = lookup("vegas").unwrap();
        assert_eq!(vegas.class, SchemeClass::DelayBased);
        assert!(lookup("pantheon_sprout").is_none());
        for name in ["cubic", "vegas", "bbr", "reno", "copa"] {
            assert!(lookup(name).is_some(), "{name}");
            assert!(build(name, &ModelParams::default()).is_some());
        }
        assert_eq!(lookup("bbr").unwrap().class, SchemeClass::Hybrid);
        assert_eq!(lookup("copa").unwrap().transport, Transport::Udp);
        assert!(registry().iter().filter(|d| d.transport == Transport::Tcp).all(|d| d.delayed_ack));
    }

    #[test]
    fn every_model_keeps_cwnd_at_least_one() {
        let params = ModelParams::default();
        for d in registry() {
            let mut cc = build(d.name, &params).unwrap();
            for i in 0..50u64 {
                cc.on_timeout(i * 1_000_000);
                cc.on_congestion(i * 1_000_000, 1);
                assert!(cc.state().cwnd >= 1.0, "{}", d.name);
                assert!(cc.budget().cwnd >= 1);
            }
        }
    }
}
