use super::reno::Reno;
use super::{AckSample, CongestionControl, ModelParams, RttTracker, SchemeState, SendBudget};

/// Once per round trip, compares the window against what the base RTT would
/// need and steers the estimated backlog `diff` into `[alpha, beta]`.
#[derive(Debug, Clone)]
pub struct Vegas {
    alpha: f64,
    beta: f64,
    gamma: f64,
    cwnd: u32,
    ssthresh: u32,
    cwnd_cnt: u32,
    base_rtt: Option<u64>,
    round_min_rtt: u64,
    round_samples: u32,
    round_end: u64,
    rtt: RttTracker,
}

impl Vegas {
    pub fn new(params: &ModelParams) -> Self {
        Vegas {
            alpha: params.vegas_alpha,
            beta: params.vegas_beta,
            gamma: params.vegas_gamma,
            cwnd: params.initial_cwnd.max(1),
            ssthresh: u32::MAX,
            cwnd_cnt: 0,
            base_rtt: None,
            round_min_rtt: u64::MAX,
            round_samples: 0,
            round_end: 0,
            rtt: RttTracker::default(),
        }
    }

    /// Estimated packets queued: `cwnd * (rtt - base) / base`.
    pub fn diff(cwnd: u32, rtt: u64, base: u64) -> f64 {
        cwnd as f64 * (rtt.saturating_sub(base)) as f64 / base.max(1) as f64
    }

    fn end_of_round(&mut self, ack: &AckSample) {
        if self.round_samples <= 2 {
            self.reno_step(ack.acked);
        } else {
            let base = self.base_rtt.unwrap_or(self.round_min_rtt);
            let rtt = self.round_min_rtt;
            let diff = Vegas::diff(self.cwnd, rtt, base);
            let in_slow_start = self.cwnd < self.ssthresh;
            if diff > self.gamma && in_slow_start {
                let target = (self.cwnd as u64 * base / rtt.max(1)) as u32;
                self.cwnd = self.cwnd.min(target + 1);
                self.ssthresh = self.ssthresh.min(self.cwnd.saturating_sub(1)).max(2);
            } else if in_slow_start {
                Reno::slow_start(&mut self.cwnd, self.ssthresh, ack.acked);
            } else if diff > self.beta {
                self.cwnd -= 1;
                self.ssthresh = self.ssthresh.min(self.cwnd.saturating_sub(1)).max(2);
            } else if diff < self.alpha {
                self.cwnd += 1;
            }
            self.cwnd = self.cwnd.max(2);
        }
        self.round_end = ack.next_seq;
        self.round_samples = 0;
        self.round_min_rtt = u64::MAX;
    }

    fn reno_step(&mut self, acked: u32) {
        let mut acked = acked;
        if self.cwnd < self.ssthresh {
            acked = Reno::slow_start(&mut self.cwnd, self.ssthresh, acked);
        }
        if acked > 0 && self.cwnd >= self.ssthresh {
            let w = self.cwnd;
            Reno::congestion_avoidance(&mut self.cwnd, &mut self.cwnd_cnt, w, acked);
        }
    }
}

impl CongestionControl for Vegas {
    fn on_ack(&mut self, ack: &AckSample) -> SendBudget {
        self.rtt.update(ack.rtt);
        if let Some(rtt) = ack.rtt {
            self.base_rtt = Some(self.base_rtt.map_or(rtt, |b| b.min(rtt)));
            self.round_min_rtt = self.round_min_rtt.min(rtt);
            self.round_samples += 1;
        }
        if ack.in_recovery {
            return self.budget();
        }
        if ack.highest_acked >= self.round_end {
            self.end_of_round(ack);
        } else if self.cwnd < self.ssthresh && ack.cwnd_limited(self.cwnd as f64) {
            Reno::slow_start(&mut self.cwnd, self.ssthresh, ack.acked);
        }
        self.budget()
    }

    fn on_congestion(&mut self, _now: u64, _in_flight: u32) {
        self.ssthresh = Reno::halved(self.cwnd);
        self.cwnd = self.ssthresh;
        self.cwnd_cnt = 0;
    }

    fn on_timeout(&mut self, _now: u64) {
        self.ssthresh = Reno::halved(self.cwnd);
        self.cwnd = 1;
        self.cwnd_cnt = 0;
    }

    fn state(&self) -> SchemeState {
        SchemeState {
            cwnd: self.cwnd.max(1) as f64,
            ssthresh: self.ssthresh as f64,
            rtt_estimate: self.rtt.srtt,
            min_rtt: self.rtt.min_or_max(),
            pacing_rate: None,
            mode: if self.cwnd < self.ssthresh { "slow-start" } else { "congestion-avoidance" },
        }
    }
}
