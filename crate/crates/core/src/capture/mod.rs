//! Per-host capture taps and the PCAP files they produce.

pub mod pcap;
pub mod wire;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::config::RunParams;
use crate::emulator::{FlowSpec, SimPacket};
use crate::error::{Error, Result};
use crate::rng::{SplitMix64, Stream};

pub use pcap::{read_capture, write_capture, PacketRecord, PcapReader, PcapWriter};
pub use wire::{encode, parse_ipv4, Ipv4View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Sender,
    Receiver,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Sender => "sender",
            Role::Receiver => "receiver",
        }
    }
}

/// Which capture file a packet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tap {
    /// Zero-based flow index.
    pub flow: usize,
    pub role: Role,
}

/// `<flow#>-<scheme>-<sender|receiver>.pcap`, with a one-based flow number.
pub fn capture_file_name(flow_number: usize, scheme: &str, role: Role) -> String {
    format!("{flow_number}-{scheme}-{}.pcap", role.as_str())
}

/// Receives every packet seen by a host tap, in simulated-time order.
pub trait CaptureSink {
    /// `time` is nanoseconds since the start of the run.
    fn record(&mut self, tap: Tap, time: u64, packet: &SimPacket) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullSink;

impl CaptureSink for NullSink {
    fn record(&mut self, _: Tap, _: u64, _: &SimPacket) -> Result<()> {
        Ok(())
    }
}

/// Keeps every tapped packet in memory; for tests and small runs.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<(Tap, u64, SimPacket)>,
}

impl MemorySink {
    pub fn tap(&self, flow: usize, role: Role) -> impl Iterator<Item = (u64, &SimPacket)> {
        self.records
            .iter()
            .filter(move |(t, _, _)| t.flow == flow && t.role == role)
            .map(|(_, time, p)| (*time, p))
    }
}

impl CaptureSink for MemorySink {
    fn record(&mut self, tap: Tap, time: u64, packet: &SimPacket) -> Result<()> {
        self.records.push((tap, time, packet.clone()));
        Ok(())
    }
}

/// Microsecond capture timestamp of simulated time `time_ns`.
pub fn capture_timestamp(epoch_secs: u64, time_ns: u64) -> u64 {
    epoch_secs * 1_000_000 + time_ns / 1_000
}

struct CaptureFile {
    path: PathBuf,
    writer: PcapWriter<BufWriter<File>>,
}

impl CaptureFile {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let writer = PcapWriter::new(BufWriter::with_capacity(1 << 18, file)).map_err(|e| Error::io(&path, e))?;
        Ok(CaptureFile { path, writer })
    }
}

/// Writes one sender and one receiver file per flow. With a capture-loss
/// probability set, sender records are dropped at random, leaving their
/// receiver-side copies as phantom packets.
pub struct PcapSink {
    files: Vec<[CaptureFile; 2]>,
    epoch: u64,
    loss: f64,
    rng: SplitMix64,
    buf: Vec<u8>,
    pub records_dropped: u64,
}

impl PcapSink {
    pub fn create(dir: &Path, flows: &[FlowSpec], params: &RunParams) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::with_capacity(flows.len());
        for f in flows {
            let open = |role| CaptureFile::create(dir.join(capture_file_name(f.number(), &f.scheme, role)));
            files.push([open(Role::Sender)?, open(Role::Receiver)?]);
        }
        Ok(PcapSink {
            files,
            epoch: params.capture_epoch,
            loss: params.capture_loss,
            rng: SplitMix64::for_stream(params.seed, Stream::CaptureLoss),
            buf: Vec::with_capacity(1600),
            records_dropped: 0,
        })
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().flatten().map(|f| f.path.as_path())
    }
}

impl CaptureSink for PcapSink {
    fn record(&mut self, tap: Tap, time: u64, packet: &SimPacket) -> Result<()> {
        if tap.role == Role::Sender && self.loss > 0.0 && self.rng.next_f64() < self.loss {
            self.records_dropped += 1;
            return Ok(());
        }
        self.buf.clear();
        encode(packet, &mut self.buf);
        let file = &mut self.files[tap.flow][tap.role as usize];
        file.writer
            .write_packet(capture_timestamp(self.epoch, time), &self.buf)
            .map_err(|e| Error::io(&file.path, e))
    }

    fn finish(&mut self) -> Result<()> {
        for file in self.files.iter_mut().flatten() {
            file.writer.flush().map_err(|e| Error::io(&file.path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        assert_eq!(capture_file_name(1, "cubic", Role::Sender), "1-cubic-sender.pcap");
        assert_eq!(capture_file_name(10, "bbr", Role::Receiver), "10-bbr-receiver.pcap");
    }

    #[test]
    fn timestamps_truncate_to_microseconds() {
        assert_eq!(capture_timestamp(1_000_000_000, 1_999), 1_000_000_000_000_001);
        assert_eq!(capture_timestamp(0, 2_500_000_000), 2_500_000);
    }
}
