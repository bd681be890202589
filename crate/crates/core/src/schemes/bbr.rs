use std::collections::VecDeque;

use super::{AckSample, CongestionControl, ModelParams, RttTracker, SchemeState, SendBudget};

const STARTUP_GAIN: f64 = 2.885;
const CWND_GAIN: f64 = 2.0;
const CYCLE: [f64; 8] = [1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
const PROBE_RTT_NS: u64 = 200_000_000;
const PROBE_RTT_CWND: f64 = 4.0;
const MIN_CWND: f64 = 4.0;
/// Bits on the wire per full-sized packet, used to express pacing rates.
const PACKET_BITS: f64 = 1500.0 * 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Startup,
    Drain,
    ProbeBw,
    ProbeRtt,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Startup => "startup",
            Mode::Drain => "drain",
            Mode::ProbeBw => "probe-bw",
            Mode::ProbeRtt => "probe-rtt",
        }
    }
}

/// Model-based pacing: the bottleneck bandwidth is the windowed maximum of
/// delivery-rate samples, the propagation delay the windowed minimum RTT.
#[derive(Debug, Clone)]
pub struct Bbr {
    mode: Mode,
    bw_window: u64,
    min_rtt_window: u64,
    /// (round, packets per second)
    bw_samples: VecDeque<(u64, f64)>,
    round: u64,
    next_round_delivered: u64,
    round_start: bool,
    full_bw: f64,
    full_bw_rounds: u32,
    filled_pipe: bool,
    window_min_rtt: Option<u64>,
    window_min_rtt_stamp: u64,
    probe_rtt_done: Option<u64>,
    cycle_index: usize,
    cycle_stamp: u64,
    cwnd: f64,
    prior_cwnd: f64,
    initial_cwnd: f64,
    rtt: RttTracker,
}

impl Bbr {
    pub fn new(params: &ModelParams) -> Self {
        let init = params.initial_cwnd.max(1) as f64;
        Bbr {
            mode: Mode::Startup,
            bw_window: params.bbr_bw_window_rounds.max(1) as u64,
            min_rtt_window: params.bbr_min_rtt_window_ms * 1_000_000,
            bw_samples: VecDeque::new(),
            round: 0,
            next_round_delivered: 0,
            round_start: false,
            full_bw: 0.0,
            full_bw_rounds: 0,
            filled_pipe: false,
            window_min_rtt: None,
            window_min_rtt_stamp: 0,
            probe_rtt_done: None,
            cycle_index: 0,
            cycle_stamp: 0,
            cwnd: init,
            prior_cwnd: init,
            initial_cwnd: init,
            rtt: RttTracker::default(),
        }
    }

    /// Packets per second.
    pub fn btl_bw(&self) -> f64 {
        self.bw_samples.iter().map(|&(_, bw)| bw).fold(0.0, f64::max)
    }

    fn bdp(&self) -> Option<f64> {
        let rtt = self.window_min_rtt?;
        let bw = self.btl_bw();
        (bw > 0.0).then(|| bw * rtt as f64 / 1e9)
    }

    fn pacing_gain(&self) -> f64 {
        match self.mode {
            Mode::Startup => STARTUP_GAIN,
            Mode::Drain => 1.0 / STARTUP_GAIN,
            Mode::ProbeBw => CYCLE[self.cycle_index],
            Mode::ProbeRtt => 1.0,
        }
    }

    fn cwnd_gain(&self) -> f64 {
        match self.mode {
            Mode::Startup | Mode::Drain => STARTUP_GAIN,
            _ => CWND_GAIN,
        }
    }

    fn update_round(&mut self, ack: &AckSample) {
        self.round_start = false;
        if let Some(rs) = ack.rate {
            if rs.prior_delivered >= self.next_round_delivered {
                self.next_round_delivered = ack.delivered;
                self.round += 1;
                self.round_start = true;
            }
        }
    }

    fn update_bw(&mut self, ack: &AckSample) {
        let Some(rs) = ack.rate else { return };
        let bw = rs.packets_per_sec();
        if bw <= 0.0 {
            return;
        }
        if !rs.app_limited || bw >= self.btl_bw() {
            self.bw_samples.push_back((self.round, bw));
        }
        while let Some(&(r, _)) = self.bw_samples.front() {
            if r + self.bw_window <= self.round {
                self.bw_samples.pop_front();
            } else {
                break;
            }
        }
    }

    fn check_full_pipe(&mut self) {
        if self.filled_pipe || !self.round_start {
            return;
        }
        let bw = self.btl_bw();
        if bw >= self.full_bw * 1.25 {
            self.full_bw = bw;
            self.full_bw_rounds = 0;
            return;
        }
        self.full_bw_rounds += 1;
        if self.full_bw_rounds >= 3 {
            self.filled_pipe = true;
        }
    }

    fn update_min_rtt(&mut self, ack: &AckSample) -> bool {
        let expired = ack.now > self.window_min_rtt_stamp + self.min_rtt_window;
        if let Some(rtt) = ack.rtt {
            if self.window_min_rtt.map_or(true, |m| rtt <= m) || expired {
                self.window_min_rtt = Some(rtt);
                self.window_min_rtt_stamp = ack.now;
            }
        }
        expired
    }

    fn advance_cycle(&mut self, ack: &AckSample) {
        let rtt = self.window_min_rtt.unwrap_or(0);
        let elapsed = ack.now.saturating_sub(self.cycle_stamp) > rtt;
        let gain = CYCLE[self.cycle_index];
        let bdp = self.bdp().unwrap_or(self.cwnd);
        let advance = if gain > 1.0 {
            elapsed && ack.prior_in_flight as f64 >= gain * bdp
        } else if gain < 1.0 {
            elapsed || ack.in_flight as f64 <= bdp
        } else {
            elapsed
        };
        if advance {
            self.cycle_index = (self.cycle_index + 1) % CYCLE.len();
            self.cycle_stamp = ack.now;
        }
    }

    fn enter_probe_bw(&mut self, now: u64) {
        self.mode = Mode::ProbeBw;
        // Start anywhere except the draining phase.
        self.cycle_index = 2 + (self.round as usize % 6);
        self.cycle_stamp = now;
    }
}

impl CongestionControl for Bbr {
    fn on_ack(&mut self, ack: &AckSample) -> SendBudget {
        self.rtt.update(ack.rtt);
        self.update_round(ack);
        self.update_bw(ack);
        self.check_full_pipe();
        let min_rtt_expired = self.update_min_rtt(ack);

        match self.mode {
            Mode::Startup if self.filled_pipe => self.mode = Mode::Drain,
            Mode::ProbeBw => self.advance_cycle(ack),
            _ => {}
        }
        if self.mode == Mode::Drain {
            if let Some(bdp) = self.bdp() {
                if ack.in_flight as f64 <= bdp {
                    self.enter_probe_bw(ack.now);
                }
            }
        }
        if min_rtt_expired && self.mode != Mode::ProbeRtt {
            self.prior_cwnd = self.cwnd;
            self.mode = Mode::ProbeRtt;
            self.probe_rtt_done = None;
        }
        if self.mode == Mode::ProbeRtt {
            match self.probe_rtt_done {
                None if ack.in_flight as f64 <= PROBE_RTT_CWND => {
                    self.probe_rtt_done = Some(ack.now + PROBE_RTT_NS);
                }
                Some(done) if ack.now >= done => {
                    self.window_min_rtt_stamp = ack.now;
                    self.cwnd = self.cwnd.max(self.prior_cwnd);
                    if self.filled_pipe {
                        self.enter_probe_bw(ack.now);
                    } else {
                        self.mode = Mode::Startup;
                    }
                }
                _ => {}
            }
        }

        let target = match self.bdp() {
            Some(bdp) => (self.cwnd_gain() * bdp).max(MIN_CWND),
            None => self.initial_cwnd.max(MIN_CWND),
        };
        if self.filled_pipe {
            self.cwnd = (self.cwnd + ack.acked as f64).min(target);
        } else if self.cwnd < target || ack.delivered < self.initial_cwnd as u64 {
            self.cwnd += ack.acked as f64;
        }
        self.cwnd = self.cwnd.max(MIN_CWND);
        self.budget()
    }

    fn on_congestion(&mut self, _now: u64, in_flight: u32) {
        // Packet conservation during recovery.
        self.prior_cwnd = self.cwnd;
        self.cwnd = (in_flight as f64 + 1.0).max(MIN_CWND).min(self.cwnd);
    }

    fn on_recovery_exit(&mut self, _now: u64) {
        self.cwnd = self.cwnd.max(self.prior_cwnd);
    }

    fn on_timeout(&mut self, _now: u64) {
        self.prior_cwnd = self.cwnd;
        self.cwnd = 1.0;
    }

    fn state(&self) -> SchemeState {
        let cwnd = if self.mode == Mode::ProbeRtt {
            self.cwnd.min(PROBE_RTT_CWND)
        } else {
            self.cwnd
        };
        let bw = self.btl_bw();
        let rate_pps = if bw > 0.0 {
            bw * self.pacing_gain()
        } else {
            let rtt = self.rtt.min_rtt.unwrap_or(1_000_000).max(1) as f64 / 1e9;
            STARTUP_GAIN * self.initial_cwnd / rtt
        };
        SchemeState {
            cwnd: cwnd.max(1.0),
            ssthresh: f64::INFINITY,
            rtt_estimate: self.rtt.srtt,
            min_rtt: self.rtt.min_or_max(),
            pacing_rate: Some(rate_pps * PACKET_BITS),
            mode: self.mode.name(),
        }
    }
}
