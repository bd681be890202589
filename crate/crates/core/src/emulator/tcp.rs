use std::collections::VecDeque;

use crate::schemes::{AckDecision, AckSample, CongestionControl, DelayedAck, ModelParams, RateSample};

use super::packet::{Payload, SackBlocks, MAX_SACK_BLOCKS};
use super::{Action, Tick};

/// Segments above a hole that must be selectively acknowledged before the
/// hole counts as lost.
const DUP_THRESHOLD: u32 = 3;

#[derive(Debug, Clone, Copy, Default)]
struct Segment {
    sent: u64,
    delivered_at_send: u64,
    delivered_time_at_send: u64,
    first_sent_at_send: u64,
    retransmitted: bool,
    sacked: bool,
    lost: bool,
    in_flight: bool,
}

/// Greedy sender with a per-segment scoreboard: SACK-based loss detection,
/// one window reduction per recovery episode, and a retransmission timer
/// with exponential backoff.
pub struct TcpSender {
    cc: Box<dyn CongestionControl>,
    rwnd: u64,
    mss: u32,
    next_seq: u64,
    snd_una: u64,
    segs: VecDeque<Segment>,
    pipe: u32,
    sacked: u32,
    lost_unsent: u32,
    delivered: u64,
    delivered_time: u64,
    first_sent_time: u64,
    in_recovery: bool,
    in_loss: bool,
    recovery_point: u64,
    rack_sent: u64,
    rack_rtt: u64,
    srtt: Option<u64>,
    rttvar: u64,
    rto: u64,
    min_rto: u64,
    backoff: u32,
    rto_deadline: Option<u64>,
    rto_timer_at: Option<u64>,
    pacing_next: u64,
    pacing_timer: bool,
    ts_ecr: u32,
    pub stats: SenderStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub segments_sent: u64,
    pub retransmissions: u64,
    pub timeouts: u64,
    pub recoveries: u64,
}

fn ts_clock(now: u64) -> u32 {
    (now / 1_000_000) as u32
}

impl TcpSender {
    pub fn new(cc: Box<dyn CongestionControl>, params: &ModelParams) -> Self {
        TcpSender {
            cc,
            rwnd: params.receive_window.max(1) as u64,
            mss: params.mss,
            next_seq: 0,
            snd_una: 0,
            segs: VecDeque::new(),
            pipe: 0,
            sacked: 0,
            lost_unsent: 0,
            delivered: 0,
            delivered_time: 0,
            first_sent_time: 0,
            in_recovery: false,
            in_loss: false,
            recovery_point: 0,
            rack_sent: 0,
            rack_rtt: 0,
            srtt: None,
            rttvar: 0,
            rto: params.initial_rto_ms * 1_000_000,
            min_rto: params.min_rto_ms * 1_000_000,
            backoff: 0,
            rto_deadline: None,
            rto_timer_at: None,
            pacing_next: 0,
            pacing_timer: false,
            ts_ecr: 0,
            stats: SenderStats::default(),
        }
    }

    pub fn cc(&self) -> &dyn CongestionControl {
        self.cc.as_ref()
    }

    pub fn in_flight(&self) -> u32 {
        self.pipe
    }

    pub fn start(&mut self, now: u64, out: &mut Vec<Action>) {
        self.delivered_time = now;
        self.first_sent_time = now;
        self.pump(now, out);
    }

    fn seg(&mut self, seq: u64) -> &mut Segment {
        &mut self.segs[(seq - self.snd_una) as usize]
    }

    /// Sends as much as the window, the receive window and pacing allow.
    pub fn pump(&mut self, now: u64, out: &mut Vec<Action>) {
        loop {
            let budget = self.cc.budget();
            if self.pipe >= budget.cwnd.max(1) {
                break;
            }
            let seq = if self.lost_unsent > 0 {
                self.first_lost()
            } else if self.next_seq - self.snd_una < self.rwnd {
                None
            } else {
                break;
            };
            if let Some(rate) = budget.pacing_rate.filter(|r| *r > 0.0) {
                if now < self.pacing_next {
                    if !self.pacing_timer {
                        self.pacing_timer = true;
                        out.push(Action::Timer(self.pacing_next, Tick::Pacing));
                    }
                    break;
                }
                let gap = ((self.mss + 52) as f64 * 8e9 / rate).round() as u64;
                self.pacing_next = self.pacing_next.max(now) + gap;
            }
            self.transmit(now, seq, out);
        }
    }

    fn first_lost(&self) -> Option<u64> {
        let i = self.segs.iter().position(|s| s.lost && !s.in_flight && !s.sacked)?;
        Some(self.snd_una + i as u64)
    }

    /// Sends segment `seq`, or a new one when `None`.
    fn transmit(&mut self, now: u64, seq: Option<u64>, out: &mut Vec<Action>) {
        let (delivered, delivered_time, first_sent) = (self.delivered, self.delivered_time, self.first_sent_time);
        let seq = match seq {
            Some(seq) => {
                let seg = self.seg(seq);
                seg.lost = false;
                seg.retransmitted = true;
                self.lost_unsent -= 1;
                self.stats.retransmissions += 1;
                seq
            }
            None => {
                self.segs.push_back(Segment::default());
                self.next_seq += 1;
                self.next_seq - 1
            }
        };
        let seg = self.seg(seq);
        seg.sent = now;
        seg.in_flight = true;
        seg.delivered_at_send = delivered;
        seg.delivered_time_at_send = delivered_time;
        seg.first_sent_at_send = first_sent;
        self.pipe += 1;
        self.stats.segments_sent += 1;
        out.push(Action::Send(Payload::TcpData {
            seq,
            len: self.mss,
            ts_val: ts_clock(now),
            ts_ecr: self.ts_ecr,
        }));
        self.arm_rto(now, false, out);
    }

    fn arm_rto(&mut self, now: u64, restart: bool, out: &mut Vec<Action>) {
        if self.snd_una == self.next_seq {
            self.rto_deadline = None;
            return;
        }
        if self.rto_deadline.is_none() || restart {
            let deadline = now + (self.rto << self.backoff.min(6)).min(120_000_000_000);
            self.rto_deadline = Some(deadline);
            if self.rto_timer_at.map_or(true, |t| t > deadline) {
                self.rto_timer_at = Some(deadline);
                out.push(Action::Timer(deadline, Tick::Rto));
            }
        }
    }

    fn update_rtt(&mut self, rtt: u64) {
        match self.srtt {
            None => {
                self.srtt = Some(rtt);
                self.rttvar = rtt / 2;
            }
            Some(srtt) => {
                self.rttvar = (3 * self.rttvar + srtt.abs_diff(rtt)) / 4;
                self.srtt = Some((7 * srtt + rtt) / 8);
            }
        }
        self.rto = self.srtt.unwrap_or(rtt) + (4 * self.rttvar).max(self.min_rto);
    }

    fn deliver(&mut self, seq: u64, newest: &mut Option<Segment>, rtt_sent: &mut Option<u64>) {
        let seg = *self.seg(seq);
        if seg.in_flight {
            self.pipe -= 1;
        }
        if seg.lost && !seg.in_flight {
            self.lost_unsent -= 1;
        }
        self.delivered += 1;
        if newest.map_or(true, |n| seg.sent >= n.sent) {
            *newest = Some(seg);
            if !seg.retransmitted {
                *rtt_sent = Some(seg.sent);
            }
        }
        let s = self.seg(seq);
        s.in_flight = false;
        s.lost = false;
    }

    pub fn on_ack(&mut self, now: u64, ack: u64, sack: &SackBlocks, ts_val: u32, out: &mut Vec<Action>) {
        if ack > self.next_seq {
            return;
        }
        self.ts_ecr = ts_val;
        let ack = ack.max(self.snd_una);
        let prior_in_flight = self.pipe;
        let mut newest: Option<Segment> = None;
        let mut rtt_sent = None;
        let mut highest = None;
        let mut newly = 0u32;

        for seq in self.snd_una..ack {
            if self.seg(seq).sacked {
                self.sacked -= 1;
            } else {
                self.deliver(seq, &mut newest, &mut rtt_sent);
                highest = Some(seq);
                newly += 1;
            }
        }
        let advanced = ack > self.snd_una;
        for &(start, end) in sack.as_slice() {
            for seq in start.max(ack)..end.min(self.next_seq) {
                if !self.seg(seq).sacked {
                    self.deliver(seq, &mut newest, &mut rtt_sent);
                    self.seg(seq).sacked = true;
                    self.sacked += 1;
                    highest = highest.max(Some(seq));
                    newly += 1;
                }
            }
        }
        let removed = (ack - self.snd_una) as usize;
        self.segs.drain(..removed);
        self.snd_una = ack;

        let mut rate = None;
        if let Some(seg) = newest {
            self.delivered_time = now;
            if seg.sent >= self.rack_sent {
                self.rack_sent = seg.sent;
                self.rack_rtt = now - seg.sent;
            }
            let interval = (seg.sent - seg.first_sent_at_send).max(now - seg.delivered_time_at_send);
            rate = Some(RateSample {
                delivered: self.delivered - seg.delivered_at_send,
                interval_ns: interval,
                prior_delivered: seg.delivered_at_send,
                app_limited: false,
            });
            self.first_sent_time = seg.sent;
        }
        let rtt = rtt_sent.map(|sent| now - sent);
        if let Some(rtt) = rtt {
            self.update_rtt(rtt);
            self.backoff = 0;
        }

        if self.sacked > 0 && self.detect_losses(now) && !self.in_recovery && !self.in_loss {
            self.in_recovery = true;
            self.recovery_point = self.next_seq;
            self.stats.recoveries += 1;
            self.cc.on_congestion(now, self.pipe);
            // Fast retransmit: the first hole goes out whatever the window.
            if let Some(seq) = self.first_lost() {
                self.transmit(now, Some(seq), out);
            }
        }
        if (self.in_recovery || self.in_loss) && self.snd_una >= self.recovery_point {
            if self.in_recovery {
                self.cc.on_recovery_exit(now);
            }
            self.in_recovery = false;
            self.in_loss = false;
        }

        if newly > 0 {
            let highest = highest.unwrap_or(ack.saturating_sub(1));
            self.cc.on_ack(&AckSample {
                now,
                acked: newly,
                rtt,
                prior_in_flight,
                in_flight: self.pipe,
                delivered: self.delivered,
                next_seq: self.next_seq,
                highest_acked: highest,
                in_recovery: self.in_recovery,
                rate,
            });
        }
        if advanced {
            self.arm_rto(now, true, out);
        }
        self.pump(now, out);
    }

    /// Marks holes as lost; returns whether anything new was marked.
    fn detect_losses(&mut self, now: u64) -> bool {
        let reo_wnd = self.srtt.unwrap_or(0) / 4;
        let mut sacked_above = 0u32;
        let mut any = false;
        for i in (0..self.segs.len()).rev() {
            let seg = &mut self.segs[i];
            if seg.sacked {
                sacked_above += 1;
                continue;
            }
            if sacked_above == 0 || !seg.in_flight {
                continue;
            }
            let lost = if seg.retransmitted {
                seg.sent < self.rack_sent && now >= seg.sent + self.rack_rtt + reo_wnd
            } else {
                sacked_above >= DUP_THRESHOLD
            };
            if lost {
                seg.lost = true;
                seg.in_flight = false;
                self.pipe -= 1;
                self.lost_unsent += 1;
                any = true;
            }
        }
        any
    }

    pub fn on_timer(&mut self, now: u64, tick: Tick, out: &mut Vec<Action>) {
        match tick {
            Tick::Pacing => {
                self.pacing_timer = false;
                self.pump(now, out);
            }
            Tick::Rto => {
                if self.rto_timer_at != Some(now) {
                    return;
                }
                self.rto_timer_at = None;
                match self.rto_deadline {
                    None => {}
                    Some(deadline) if deadline > now => {
                        self.rto_timer_at = Some(deadline);
                        out.push(Action::Timer(deadline, Tick::Rto));
                    }
                    Some(_) => self.on_timeout(now, out),
                }
            }
            _ => {}
        }
    }

    fn on_timeout(&mut self, now: u64, out: &mut Vec<Action>) {
        self.stats.timeouts += 1;
        for seg in self.segs.iter_mut() {
            if seg.sacked {
                continue;
            }
            if seg.in_flight {
                seg.in_flight = false;
                self.pipe -= 1;
            }
            if !seg.lost {
                seg.lost = true;
                self.lost_unsent += 1;
            }
        }
        self.in_recovery = false;
        self.in_loss = true;
        self.recovery_point = self.next_seq;
        self.cc.on_timeout(now);
        self.backoff += 1;
        self.rto_deadline = None;
        self.pacing_next = now;
        self.pump(now, out);
        self.arm_rto(now, true, out);
    }
}

/// Receiver side: cumulative ack, SACK blocks and the delayed-ack policy.
pub struct TcpReceiver {
    rcv_nxt: u64,
    /// Out-of-order ranges `[start, end)` with a recency stamp.
    ranges: Vec<(u64, u64, u64)>,
    stamp: u64,
    ts_recent: u32,
    delayed: DelayedAck,
    pub segments_received: u64,
}

impl TcpReceiver {
    pub fn new(delayed_ack: bool, timeout: u64) -> Self {
        TcpReceiver {
            rcv_nxt: 0,
            ranges: Vec::new(),
            stamp: 0,
            ts_recent: 0,
            delayed: DelayedAck::new(delayed_ack, timeout),
            segments_received: 0,
        }
    }

    pub fn on_data(&mut self, now: u64, seq: u64, ts_val: u32, out: &mut Vec<Action>) {
        self.segments_received += 1;
        let mut in_order = seq == self.rcv_nxt && self.ranges.is_empty();
        if seq == self.rcv_nxt {
            self.ts_recent = ts_val;
            self.rcv_nxt += 1;
            // Filling a hole: pull in the range that now follows.
            if let Some(pos) = self.ranges.iter().position(|r| r.0 == self.rcv_nxt) {
                self.rcv_nxt = self.ranges.remove(pos).1;
                in_order = false;
            }
        } else if seq > self.rcv_nxt {
            self.insert(seq);
        }
        match self.delayed.on_data(now, in_order) {
            AckDecision::Now => self.emit_ack(now, out),
            AckDecision::Arm { deadline, token } => out.push(Action::Timer(deadline, Tick::DelayedAck(token))),
        }
    }

    fn insert(&mut self, seq: u64) {
        self.stamp += 1;
        if self.ranges.iter().any(|r| r.0 <= seq && seq < r.1) {
            return;
        }
        let below = self.ranges.iter().position(|r| r.1 == seq);
        let above = self.ranges.iter().position(|r| r.0 == seq + 1);
        match (below, above) {
            (Some(b), Some(a)) => {
                let end = self.ranges[a].1;
                self.ranges[b].1 = end;
                self.ranges[b].2 = self.stamp;
                self.ranges.remove(a);
            }
            (Some(b), None) => {
                self.ranges[b].1 = seq + 1;
                self.ranges[b].2 = self.stamp;
            }
            (None, Some(a)) => {
                self.ranges[a].0 = seq;
                self.ranges[a].2 = self.stamp;
            }
            (None, None) => self.ranges.push((seq, seq + 1, self.stamp)),
        }
    }

    pub fn sack_blocks(&self) -> SackBlocks {
        let mut by_recency: Vec<&(u64, u64, u64)> = self.ranges.iter().collect();
        by_recency.sort_by(|a, b| b.2.cmp(&a.2));
        let mut sack = SackBlocks::default();
        for r in by_recency.into_iter().take(MAX_SACK_BLOCKS) {
            sack.push((r.0, r.1));
        }
        sack
    }

    fn emit_ack(&mut self, now: u64, out: &mut Vec<Action>) {
        out.push(Action::Send(Payload::TcpAck {
            ack: self.rcv_nxt,
            sack: self.sack_blocks(),
            ts_val: ts_clock(now),
            ts_ecr: self.ts_recent,
        }));
    }

    pub fn on_timer(&mut self, now: u64, tick: Tick, out: &mut Vec<Action>) {
        if let Tick::DelayedAck(token) = tick {
            if self.delayed.on_timer(token) {
                self.emit_ack(now, out);
            }
        }
    }

    pub fn rcv_nxt(&self) -> u64 {
        self.rcv_nxt
    }
}
