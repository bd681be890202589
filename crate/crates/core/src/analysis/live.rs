//! Analysis of packets as the emulator emits them, without capture files.

use super::{FlowAnalysis, Matcher};
use crate::capture::{capture_timestamp, encode, CaptureSink, PacketRecord, Role, Tap};
use crate::config::Direction;
use crate::emulator::SimPacket;
use crate::error::Result;

/// A capture sink that feeds every record straight into a [`Matcher`] per
/// flow. The resulting logs equal those of writing the captures and
/// analyzing them, as long as no sender record is dropped.
pub struct LiveAnalysis {
    epoch: u64,
    directions: Vec<Direction>,
    /// Created at the first record, whose timestamp is the base time.
    matchers: Vec<Matcher>,
    buf: Vec<u8>,
}

impl LiveAnalysis {
    /// `directions[i]` is the direction of flow `i + 1`; `epoch` is the
    /// capture epoch in seconds.
    pub fn new(directions: Vec<Direction>, epoch: u64) -> Self {
        LiveAnalysis {
            epoch,
            directions,
            matchers: Vec::new(),
            buf: Vec::with_capacity(1600),
        }
    }

    /// One result per flow, in flow order.
    pub fn finish(self) -> Vec<FlowAnalysis> {
        let mut matchers = self.matchers;
        if matchers.is_empty() {
            matchers = self.directions.iter().map(|&d| Matcher::new(d, 0)).collect();
        }
        matchers.into_iter().map(Matcher::finish).collect()
    }
}

impl CaptureSink for LiveAnalysis {
    fn record(&mut self, tap: Tap, time: u64, packet: &SimPacket) -> Result<()> {
        let ts_us = capture_timestamp(self.epoch, time);
        if self.matchers.is_empty() {
            self.matchers = self.directions.iter().map(|&d| Matcher::new(d, ts_us)).collect();
        }
        self.buf.clear();
        encode(packet, &mut self.buf);
        let record = PacketRecord::new(ts_us, self.buf.clone());
        let m = &mut self.matchers[tap.flow];
        match tap.role {
            Role::Sender => m.departure(&record),
            Role::Receiver => {
                m.arrival(&record);
                Ok(())
            }
        }
    }
}
