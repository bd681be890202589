use std::collections::BTreeMap;

use crate::schemes::{AckSample, CongestionControl, ModelParams, RateSample};

use super::packet::{udp_payload, Payload};
use super::{Action, Tick};

/// Feedback for `seq + REORDER_THRESHOLD` declares `seq` lost.
const REORDER_THRESHOLD: u64 = 3;

#[derive(Debug, Clone, Copy)]
struct Outstanding {
    sent: u64,
    delivered_at_send: u64,
    delivered_time_at_send: u64,
}

/// Datagram sender: every datagram is acknowledged individually and lost
/// ones are never resent.
pub struct UdpSender {
    cc: Box<dyn CongestionControl>,
    next_seq: u64,
    outstanding: BTreeMap<u64, Outstanding>,
    delivered: u64,
    delivered_time: u64,
    recovery_point: u64,
    timeout: u64,
    timer_at: Option<u64>,
    last_progress: u64,
    pacing_next: u64,
    pacing_timer: bool,
    pub datagrams_sent: u64,
    pub datagrams_lost: u64,
}

impl UdpSender {
    pub fn new(cc: Box<dyn CongestionControl>, params: &ModelParams) -> Self {
        UdpSender {
            cc,
            next_seq: 0,
            outstanding: BTreeMap::new(),
            delivered: 0,
            delivered_time: 0,
            recovery_point: 0,
            timeout: params.initial_rto_ms * 1_000_000,
            timer_at: None,
            last_progress: 0,
            pacing_next: 0,
            pacing_timer: false,
            datagrams_sent: 0,
            datagrams_lost: 0,
        }
    }

    pub fn cc(&self) -> &dyn CongestionControl {
        self.cc.as_ref()
    }

    pub fn in_flight(&self) -> u32 {
        self.outstanding.len() as u32
    }

    pub fn start(&mut self, now: u64, out: &mut Vec<Action>) {
        self.delivered_time = now;
        self.last_progress = now;
        self.pump(now, out);
    }

    pub fn pump(&mut self, now: u64, out: &mut Vec<Action>) {
        loop {
            let budget = self.cc.budget();
            if self.in_flight() >= budget.cwnd.max(1) {
                break;
            }
            if let Some(rate) = budget.pacing_rate.filter(|r| *r > 0.0) {
                if now < self.pacing_next {
                    if !self.pacing_timer {
                        self.pacing_timer = true;
                        out.push(Action::Timer(self.pacing_next, Tick::Pacing));
                    }
                    break;
                }
                let gap = (1500.0 * 8e9 / rate).round() as u64;
                self.pacing_next = self.pacing_next.max(now) + gap;
            }
            let seq = self.next_seq;
            self.next_seq += 1;
            self.outstanding.insert(
                seq,
                Outstanding {
                    sent: now,
                    delivered_at_send: self.delivered,
                    delivered_time_at_send: self.delivered_time,
                },
            );
            self.datagrams_sent += 1;
            out.push(Action::Send(Payload::UdpData {
                seq,
                sent: now,
                len: udp_payload(),
            }));
            if self.timer_at.is_none() {
                let at = now + self.timeout;
                self.timer_at = Some(at);
                out.push(Action::Timer(at, Tick::Rto));
            }
        }
    }

    pub fn on_ack(&mut self, now: u64, seq: u64, out: &mut Vec<Action>) {
        let prior_in_flight = self.in_flight();
        let Some(o) = self.outstanding.remove(&seq) else {
            return;
        };
        self.delivered += 1;
        self.delivered_time = now;
        self.last_progress = now;
        let rtt = now - o.sent;

        let mut lost_any = false;
        let cutoff = seq.saturating_sub(REORDER_THRESHOLD);
        if seq >= REORDER_THRESHOLD {
            while let Some((&s, _)) = self.outstanding.first_key_value() {
                if s > cutoff {
                    break;
                }
                self.outstanding.remove(&s);
                self.datagrams_lost += 1;
                if s >= self.recovery_point {
                    lost_any = true;
                }
            }
        }
        if lost_any {
            self.recovery_point = self.next_seq;
            self.cc.on_congestion(now, self.in_flight());
        }
        self.cc.on_ack(&AckSample {
            now,
            acked: 1,
            rtt: Some(rtt),
            prior_in_flight,
            in_flight: self.in_flight(),
            delivered: self.delivered,
            next_seq: self.next_seq,
            highest_acked: seq,
            in_recovery: false,
            rate: Some(RateSample {
                delivered: self.delivered - o.delivered_at_send,
                interval_ns: now - o.delivered_time_at_send.min(o.sent),
                prior_delivered: o.delivered_at_send,
                app_limited: false,
            }),
        });
        self.pump(now, out);
    }

    pub fn on_timer(&mut self, now: u64, tick: Tick, out: &mut Vec<Action>) {
        match tick {
            Tick::Pacing => {
                self.pacing_timer = false;
                self.pump(now, out);
            }
            Tick::Rto => {
                if self.timer_at != Some(now) {
                    return;
                }
                self.timer_at = None;
                if self.outstanding.is_empty() {
                    return;
                }
                let deadline = self.last_progress + self.timeout;
                if deadline > now {
                    self.timer_at = Some(deadline);
                    out.push(Action::Timer(deadline, Tick::Rto));
                    return;
                }
                // Nothing acknowledged for a whole timeout: give up on
                // everything outstanding.
                self.datagrams_lost += self.outstanding.len() as u64;
                self.outstanding.clear();
                self.recovery_point = self.next_seq;
                self.cc.on_timeout(now);
                self.last_progress = now;
                self.pacing_next = now;
                self.pump(now, out);
            }
            _ => {}
        }
    }
}

/// Receiver: echoes every datagram's sequence number and send time.
#[derive(Debug, Default)]
pub struct UdpReceiver {
    pub datagrams_received: u64,
}

impl UdpReceiver {
    pub fn on_data(&mut self, seq: u64, sent: u64, out: &mut Vec<Action>) {
        self.datagrams_received += 1;
        out.push(Action::Send(Payload::UdpAck { seq, echo: sent }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::build;

    #[test]
    fn gaps_of_three_are_losses_and_never_resent() {
        let params = ModelParams::default();
        let mut s = UdpSender::new(build("copa", &params).unwrap(), &params);
        let mut out = Vec::new();
        s.start(0, &mut out);
        let first: Vec<u64> = out
            .iter()
            .filter_map(|a| match a {
                Action::Send(Payload::UdpData { seq, .. }) => Some(*seq),
                _ => None,
            })
            .collect();
        assert_eq!(first, (0..10).collect::<Vec<_>>());
        out.clear();
        for seq in [1, 2, 3] {
            s.on_ack(10_000_000 + seq, seq, &mut out);
        }
        assert_eq!(s.datagrams_lost, 1);
        let resent = out.iter().any(|a| matches!(a, Action::Send(Payload::UdpData { seq: 0, .. })));
        assert!(!resent);
    }
}
