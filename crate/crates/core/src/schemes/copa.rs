use std::collections::VecDeque;

use super::{AckSample, CongestionControl, ModelParams, RttTracker, SchemeState, SendBudget};

const PACKET_BITS: f64 = 1500.0 * 8.0;
const MIN_RTT_WINDOW_NS: u64 = 10_000_000_000;

/// Moves the window toward the rate `1 / (delta * queueing delay)`, speeding
/// up when it keeps moving in the same direction.
#[derive(Debug, Clone)]
pub struct Copa {
    delta: f64,
    cwnd: f64,
    velocity: f64,
    direction_up: bool,
    same_direction_rounds: u32,
    slow_start: bool,
    round_end: u64,
    round_start_cwnd: f64,
    /// (time, rtt) samples for the standing-RTT window.
    recent: VecDeque<(u64, u64)>,
    /// (time, rtt) samples for the minimum-RTT window, increasing RTT.
    min_window: VecDeque<(u64, u64)>,
    rtt: RttTracker,
}

impl Copa {
    pub fn new(params: &ModelParams) -> Self {
        let init = params.initial_cwnd.max(1) as f64;
        Copa {
            delta: params.copa_delta,
            cwnd: init,
            velocity: 1.0,
            direction_up: true,
            same_direction_rounds: 0,
            slow_start: true,
            round_end: 0,
            round_start_cwnd: init,
            recent: VecDeque::new(),
            min_window: VecDeque::new(),
            rtt: RttTracker::default(),
        }
    }

    fn standing_rtt(&self) -> Option<u64> {
        self.recent.iter().map(|&(_, r)| r).min()
    }

    fn min_rtt(&self) -> Option<u64> {
        self.min_window.front().map(|&(_, r)| r)
    }

    fn record(&mut self, now: u64, rtt: u64) {
        self.rtt.update(Some(rtt));
        let horizon = (self.rtt.srtt / 2).max(1);
        self.recent.push_back((now, rtt));
        while let Some(&(t, _)) = self.recent.front() {
            if t + horizon < now {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        while let Some(&(_, r)) = self.min_window.back() {
            if r >= rtt {
                self.min_window.pop_back();
            } else {
                break;
            }
        }
        self.min_window.push_back((now, rtt));
        while let Some(&(t, _)) = self.min_window.front() {
            if t + MIN_RTT_WINDOW_NS < now && self.min_window.len() > 1 {
                self.min_window.pop_front();
            } else {
                break;
            }
        }
    }

    fn end_round(&mut self, next_seq: u64) {
        let up = self.cwnd > self.round_start_cwnd;
        if up == self.direction_up {
            self.same_direction_rounds += 1;
            if self.same_direction_rounds >= 3 {
                self.velocity = (self.velocity * 2.0).min(1e6);
            }
        } else {
            self.direction_up = up;
            self.same_direction_rounds = 0;
            self.velocity = 1.0;
        }
        self.round_end = next_seq;
        self.round_start_cwnd = self.cwnd;
    }
}

impl CongestionControl for Copa {
    fn on_ack(&mut self, ack: &AckSample) -> SendBudget {
        if let Some(rtt) = ack.rtt {
            self.record(ack.now, rtt);
        }
        let (Some(standing), Some(min_rtt)) = (self.standing_rtt(), self.min_rtt()) else {
            return self.budget();
        };
        let queueing = standing.saturating_sub(min_rtt) as f64 / 1e9;
        let current_rate = self.cwnd / (standing.max(1) as f64 / 1e9);
        let target_rate = if queueing > 0.0 {
            1.0 / (self.delta * queueing)
        } else {
            f64::INFINITY
        };
        let acked = ack.acked as f64;
        if self.slow_start {
            if current_rate < target_rate {
                self.cwnd += acked;
            } else {
                self.slow_start = false;
            }
        }
        if !self.slow_start {
            let up = current_rate <= target_rate;
            if up != self.direction_up {
                self.velocity = 1.0;
            }
            let step = self.velocity * acked / (self.delta * self.cwnd);
            if up {
                self.cwnd += step;
            } else {
                self.cwnd -= step;
            }
            self.cwnd = self.cwnd.max(2.0);
        }
        if ack.highest_acked >= self.round_end {
            self.end_round(ack.next_seq);
        }
        self.budget()
    }

    fn on_congestion(&mut self, _now: u64, _in_flight: u32) {
        // Delay is the only congestion signal; losses leave the window alone
        // apart from ending slow start.
        self.slow_start = false;
    }

    fn on_timeout(&mut self, _now: u64) {
        self.slow_start = false;
        self.velocity = 1.0;
        self.cwnd = (self.cwnd / 2.0).max(2.0);
    }

    fn state(&self) -> SchemeState {
        let pacing = self
            .standing_rtt()
            .map(|rtt| 2.0 * self.cwnd / (rtt.max(1) as f64 / 1e9) * PACKET_BITS);
        SchemeState {
            cwnd: self.cwnd.max(1.0),
            ssthresh: f64::INFINITY,
            rtt_estimate: self.rtt.srtt,
            min_rtt: self.rtt.min_or_max(),
            pacing_rate: pacing,
            mode: if self.slow_start { "slow-start" } else { "steady" },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::ack;
    use super::*;

    #[test]
    fn backs_off_against_a_standing_queue() {
        let mut copa = Copa::new(&ModelParams::default());
        copa.on_ack(&ack(0, 1, 10_000_000, 10));
        copa.slow_start = false;
        copa.cwnd = 100.0;
        // 100 packets over 30 ms is ~3333 pkt/s, target 1/(0.5*0.02) = 100 pkt/s.
        let before = copa.cwnd;
        for i in 1..50 {
            let mut a = ack(i * 1_000_000, 1, 30_000_000, 100);
            a.highest_acked = i;
            a.next_seq = i + 100;
            copa.on_ack(&a);
        }
        assert!(copa.cwnd < before);
    }

    #[test]
    fn grows_on_an_empty_queue() {
        let mut copa = Copa::new(&ModelParams::default());
        for i in 0..50 {
            copa.on_ack(&ack(i * 100_000, 1, 10_000_000, 10));
        }
        assert!(copa.cwnd > 10.0);
        assert!(copa.state().pacing_rate.unwrap() > 0.0);
    }
}
