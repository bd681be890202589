use super::{AckSample, CongestionControl, ModelParams, RttTracker, SchemeState, SendBudget};

/// Slow start followed by additive increase of one packet per window of
/// acknowledged packets; halves on loss.
#[derive(Debug, Clone)]
pub struct Reno {
    cwnd: u32,
    ssthresh: u32,
    cwnd_cnt: u32,
    rtt: RttTracker,
}

impl Reno {
    pub fn new(params: &ModelParams) -> Self {
        Reno {
            cwnd: params.initial_cwnd.max(1),
            ssthresh: u32::MAX,
            cwnd_cnt: 0,
            rtt: RttTracker::default(),
        }
    }

    pub fn with_window(cwnd: u32, ssthresh: u32) -> Self {
        Reno {
            cwnd,
            ssthresh,
            cwnd_cnt: 0,
            rtt: RttTracker::default(),
        }
    }

    /// Grows the window for `acked` packets; returns the acks left over when
    /// slow start reaches ssthresh.
    pub(crate) fn slow_start(cwnd: &mut u32, ssthresh: u32, acked: u32) -> u32 {
        let target = cwnd.saturating_add(acked).min(ssthresh);
        let used = target - *cwnd;
        *cwnd = target;
        acked - used.min(acked)
    }

    /// Additive increase: one packet per `w` acknowledged packets.
    pub(crate) fn congestion_avoidance(cwnd: &mut u32, cnt: &mut u32, w: u32, acked: u32) {
        let w = w.max(1);
        if *cnt >= w {
            *cnt = 0;
            *cwnd += 1;
        }
        *cnt += acked;
        if *cnt >= w {
            let delta = *cnt / w;
            *cnt -= delta * w;
            *cwnd += delta;
        }
    }

    pub(crate) fn halved(cwnd: u32) -> u32 {
        (cwnd / 2).max(2)
    }
}

impl CongestionControl for Reno {
    fn on_ack(&mut self, ack: &AckSample) -> SendBudget {
        self.rtt.update(ack.rtt);
        if !ack.in_recovery && ack.cwnd_limited(self.cwnd as f64) {
            let mut acked = ack.acked;
            if self.cwnd < self.ssthresh {
                acked = Reno::slow_start(&mut self.cwnd, self.ssthresh, acked);
            }
            if acked > 0 && self.cwnd >= self.ssthresh {
                let w = self.cwnd;
                Reno::congestion_avoidance(&mut self.cwnd, &mut self.cwnd_cnt, w, acked);
            }
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

#[cfg(test)]
mod tests {
    use super::super::testing::ack;
    use super::*;

    #[test]
    fn one_packet_per_round_trip() {
        let mut reno = Reno::with_window(10, 10);
        for i in 0..10 {
            reno.on_ack(&ack(i, 1, 10_000_000, 10));
        }
        assert_eq!(reno.state().cwnd, 11.0);
    }

    #[test]
    fn delayed_acks_still_add_one_per_round_trip() {
        let mut reno = Reno::with_window(10, 10);
        for i in 0..5 {
            reno.on_ack(&ack(i, 2, 10_000_000, 10));
        }
        assert_eq!(reno.state().cwnd, 11.0);
    }

    #[test]
    fn halves_on_loss() {
        let mut reno = Reno::with_window(10, 100);
        reno.on_congestion(0, 10);
        assert_eq!(reno.state().cwnd, 5.0);
        assert_eq!(reno.state().ssthresh, 5.0);
        reno.on_timeout(0);
        assert_eq!(reno.state().cwnd, 1.0);
    }

    #[test]
    fn slow_start_doubles() {
        let mut reno = Reno::new(&ModelParams::default());
        for i in 0..10 {
            let w = reno.state().cwnd as u32;
            reno.on_ack(&ack(i, 1, 1_000_000, w));
        }
        assert_eq!(reno.state().cwnd, 20.0);
    }

    #[test]
    fn no_growth_when_not_window_limited() {
        let mut reno = Reno::with_window(10, 10);
        for i in 0..30 {
            reno.on_ack(&ack(i, 1, 1_000_000, 3));
        }
        assert_eq!(reno.state().cwnd, 10.0);
    }
}
