//! Receiver-side acknowledgment policy of TCP-like flows.

pub const DELAYED_ACK_TIMEOUT_NS: u64 = 40_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckDecision {
    /// Send an acknowledgment now.
    Now,
    /// Arm the timer; an ack is due at `deadline` unless more data arrives.
    /// `token` identifies the timer for [`DelayedAck::on_timer`].
    Arm { deadline: u64, token: u64 },
}

/// Acknowledges every second in-order segment immediately and a lone segment
/// when the timer fires. Out-of-order and duplicate segments are acknowledged
/// at once so the sender learns about holes quickly.
#[derive(Debug, Clone)]
pub struct DelayedAck {
    enabled: bool,
    timeout: u64,
    pending: bool,
    token: u64,
}

impl DelayedAck {
    pub fn new(enabled: bool, timeout: u64) -> Self {
        DelayedAck {
            enabled,
            timeout,
            pending: false,
            token: 0,
        }
    }

    pub fn on_data(&mut self, now: u64, in_order: bool) -> AckDecision {
        if !self.enabled || !in_order || self.pending {
            self.pending = false;
            self.token += 1;
            return AckDecision::Now;
        }
        self.pending = true;
        self.token += 1;
        AckDecision::Arm {
            deadline: now + self.timeout,
            token: self.token,
        }
    }

    /// Returns true when the timer identified by `token` should produce an ack.
    pub fn on_timer(&mut self, token: u64) -> bool {
        if self.pending && token == self.token {
            self.pending = false;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_gets_one_immediate_ack() {
        let mut d = DelayedAck::new(true, DELAYED_ACK_TIMEOUT_NS);
        let first = d.on_data(0, true);
        let AckDecision::Arm { token, .. } = first else { panic!("{first:?}") };
        assert_eq!(d.on_data(12_000, true), AckDecision::Now);
        // The first packet's timer is now stale.
        assert!(!d.on_timer(token));
    }

    #[test]
    fn lone_packet_acked_after_timeout() {
        let mut d = DelayedAck::new(true, DELAYED_ACK_TIMEOUT_NS);
        match d.on_data(1_000, true) {
            AckDecision::Arm { deadline, token } => {
                assert_eq!(deadline, 1_000 + 40_000_000);
                assert!(d.on_timer(token));
                assert!(!d.on_timer(token));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disabled_acks_everything() {
        let mut d = DelayedAck::new(false, DELAYED_ACK_TIMEOUT_NS);
        for i in 0..5 {
            assert_eq!(d.on_data(i, true), AckDecision::Now);
        }
    }

    #[test]
    fn out_of_order_is_immediate() {
        let mut d = DelayedAck::new(true, DELAYED_ACK_TIMEOUT_NS);
        assert_eq!(d.on_data(0, false), AckDecision::Now);
    }
}
