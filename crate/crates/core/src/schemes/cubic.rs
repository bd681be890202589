use super::{AckSample, CongestionControl, ModelParams, RttTracker, SchemeState, SendBudget};

/// HyStart is only consulted once the window reaches this many packets.
const HYSTART_LOW_WINDOW: f64 = 16.0;
const HYSTART_MIN_SAMPLES: u32 = 8;
const HYSTART_ACK_DELTA: u64 = 2_000_000;
const HYSTART_DELAY_MIN: u64 = 4_000_000;
const HYSTART_DELAY_MAX: u64 = 16_000_000;

/// Slow-start exit detection: leave slow start when a round's acks keep
/// arriving for longer than half the minimum RTT (ack train), or when the
/// smallest RTT of a round's first samples has risen noticeably.
#[derive(Debug, Clone, Default)]
struct HyStart {
    found: bool,
    round_start: u64,
    last_ack: u64,
    end_seq: u64,
    curr_rtt: u64,
    samples: u32,
}

impl HyStart {
    fn reset(&mut self, now: u64, next_seq: u64) {
        self.round_start = now;
        self.last_ack = now;
        self.end_seq = next_seq;
        self.curr_rtt = u64::MAX;
        self.samples = 0;
    }

    /// Returns true when slow start should end.
    fn update(&mut self, now: u64, rtt: u64, delay_min: u64, cwnd: f64, mss: u32) -> bool {
        if now - self.last_ack <= HYSTART_ACK_DELTA {
            self.last_ack = now;
            // The sender is not paced, so only half the allowance applies.
            let rate_delay = if delay_min > 0 {
                (4.0 * 65_536.0 * delay_min as f64 / (2.0 * cwnd * mss as f64)).min(1e6) as u64
            } else {
                0
            };
            if now - self.round_start > (delay_min + rate_delay) / 2 {
                self.found = true;
                return true;
            }
        }
        self.curr_rtt = self.curr_rtt.min(rtt);
        if self.samples < HYSTART_MIN_SAMPLES {
            self.samples += 1;
        } else if self.curr_rtt > delay_min + (delay_min / 8).clamp(HYSTART_DELAY_MIN, HYSTART_DELAY_MAX) {
            self.found = true;
        }
        self.found
    }
}

/// Cubic window growth `W(t) = C (t - K)^3 + W_max` with fast convergence,
/// the TCP-friendly lower bound and HyStart.
#[derive(Debug, Clone)]
pub struct Cubic {
    c: f64,
    beta: f64,
    cwnd: f64,
    ssthresh: f64,
    w_last_max: f64,
    epoch_start: Option<u64>,
    origin: f64,
    k: f64,
    w_est: f64,
    rtt: RttTracker,
    hystart: Option<HyStart>,
    mss: u32,
}

impl Cubic {
    pub fn new(params: &ModelParams) -> Self {
        Cubic {
            c: params.cubic_c,
            beta: params.cubic_beta,
            cwnd: params.initial_cwnd.max(1) as f64,
            ssthresh: f64::INFINITY,
            w_last_max: 0.0,
            epoch_start: None,
            origin: 0.0,
            k: 0.0,
            w_est: 0.0,
            rtt: RttTracker::default(),
            hystart: params.cubic_hystart.then(HyStart::default),
            mss: params.mss,
        }
    }

    fn alpha(&self) -> f64 {
        3.0 * (1.0 - self.beta) / (1.0 + self.beta)
    }

    /// Acks needed per one-packet increase.
    fn update(&mut self, now: u64, acked: u32) -> f64 {
        let epoch = *self.epoch_start.get_or_insert_with(|| {
            if self.cwnd < self.w_last_max {
                self.k = ((self.w_last_max - self.cwnd) / self.c).cbrt();
                self.origin = self.w_last_max;
            } else {
                self.k = 0.0;
                self.origin = self.cwnd;
            }
            self.w_est = self.cwnd;
            now
        });
        let delay_min = self.rtt.min_rtt.unwrap_or(0);
        let t = (now - epoch + delay_min) as f64 / 1e9;
        let target = self.origin + self.c * (t - self.k).powi(3);
        let mut cnt = if target > self.cwnd {
            self.cwnd / (target - self.cwnd)
        } else {
            100.0 * self.cwnd
        };
        // Before the first loss there is no plateau to aim at: grow 5% per RTT.
        if self.w_last_max == 0.0 {
            cnt = cnt.min(20.0);
        }
        self.w_est += self.alpha() * acked as f64 / self.cwnd;
        if self.w_est > self.cwnd {
            cnt = cnt.min(self.cwnd / (self.w_est - self.cwnd));
        }
        cnt.max(2.0)
    }
}

impl CongestionControl for Cubic {
    fn on_ack(&mut self, ack: &AckSample) -> SendBudget {
        self.rtt.update(ack.rtt);
        if self.cwnd < self.ssthresh {
            if let Some(h) = self.hystart.as_mut().filter(|h| !h.found) {
                if ack.highest_acked >= h.end_seq {
                    h.reset(ack.now, ack.next_seq);
                }
                if let (Some(rtt), Some(min)) = (ack.rtt, self.rtt.min_rtt) {
                    if self.cwnd >= HYSTART_LOW_WINDOW && h.update(ack.now, rtt, min, self.cwnd, self.mss) {
                        self.ssthresh = self.cwnd;
                    }
                }
            }
        }
        if !ack.in_recovery && ack.cwnd_limited(self.cwnd) {
            let mut acked = ack.acked as f64;
            if self.cwnd < self.ssthresh {
                let grow = acked.min(self.ssthresh - self.cwnd);
                self.cwnd += grow;
                acked -= grow;
            }
            if acked > 0.0 {
                let cnt = self.update(ack.now, acked as u32);
                self.cwnd += acked / cnt;
            }
        }
        self.budget()
    }

    fn on_congestion(&mut self, _now: u64, _in_flight: u32) {
        self.epoch_start = None;
        self.w_last_max = if self.cwnd < self.w_last_max {
            self.cwnd * (1.0 + self.beta) / 2.0
        } else {
            self.cwnd
        };
        self.ssthresh = (self.cwnd * self.beta).max(2.0);
        self.cwnd = self.ssthresh;
    }

    fn on_timeout(&mut self, _now: u64) {
        self.epoch_start = None;
        self.w_last_max = self.cwnd;
        self.ssthresh = (self.cwnd * self.beta).max(2.0);
        self.cwnd = 1.0;
        if let Some(h) = self.hystart.as_mut() {
            *h = HyStart::default();
        }
    }

    fn state(&self) -> SchemeState {
        SchemeState {
            cwnd: self.cwnd.max(1.0),
            ssthresh: self.ssthresh,
            rtt_estimate: self.rtt.srtt,
            min_rtt: self.rtt.min_or_max(),
            pacing_rate: None,
            mode: if self.cwnd < self.ssthresh { "slow-start" } else { "congestion-avoidance" },
        }
    }
}
