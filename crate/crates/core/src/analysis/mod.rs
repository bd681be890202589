//! Sender/receiver capture matching: one-way delays, sent and lost bytes.
//!
//! Every packet from the sender host is keyed by a SHA-1 digest of its IP
//! Identification field and IP payload. The sender capture fills a
//! digest-to-departure map; each receiver packet that finds its digest yields
//! one (arrival, delay, size) entry and removes it from the map. Receiver
//! packets without an entry are phantoms: sent, but missing from the sender
//! capture. Whatever stays in the map was lost.

mod live;
mod log;

use std::collections::HashMap;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha1::{Digest as _, Sha1};

use crate::capture::{capture_file_name, parse_ipv4, PacketRecord, PcapReader, Role};
use crate::config::{load_metadata, Direction, METADATA_FILE};
use crate::error::{Error, Result};

pub use live::LiveAnalysis;
pub use log::{loss_percent, py_float, FlowLog};

pub type Digest = [u8; 20];

/// SHA-1 over the big-endian IP Identification field followed by the IP payload.
pub fn digest(ip_id: u16, ip_payload: &[u8]) -> Digest {
    let mut h = Sha1::new();
    h.update(ip_id.to_be_bytes());
    h.update(ip_payload);
    h.finalize().into()
}

/// The sender's address of a flow: hosts in the left half have the lower
/// addresses, so a rightward flow is sent from the lower one.
pub fn sender_address(a: Ipv4Addr, b: Ipv4Addr, direction: Direction) -> Ipv4Addr {
    match direction {
        Direction::Rightward => a.min(b),
        Direction::Leftward => a.max(b),
    }
}

/// Earliest first-record timestamp (µs) over all captures; 0 when all are empty.
pub fn base_time(paths: &[PathBuf]) -> Result<u64> {
    let mut base: Option<u64> = None;
    for path in paths {
        if let Some(r) = PcapReader::open(path)?.next_record()? {
            base = Some(base.map_or(r.ts_us, |b| b.min(r.ts_us)));
        }
    }
    Ok(base.unwrap_or(0))
}

/// Packet and byte totals of one capture, as printed in the analysis summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CaptureCounts {
    pub packets: u64,
    pub bytes: u64,
    /// Packets whose source is the sender host.
    pub flow_packets: u64,
    pub flow_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowAnalysis {
    pub log: FlowLog,
    pub sender: CaptureCounts,
    pub receiver: CaptureCounts,
    pub matched_packets: u64,
    pub phantom_packets: u64,
    pub phantom_bytes: u64,
    pub lost_packets: u64,
    /// Largest number of live digest-map entries.
    pub peak_map_len: usize,
}

struct Departure {
    time_us: u64,
    size: u32,
    index: u64,
}

/// Decides the sender address from the first IPv4 packet seen.
struct Endpoints {
    direction: Direction,
    sender: Option<Ipv4Addr>,
}

impl Endpoints {
    fn is_from_sender(&mut self, src: Ipv4Addr, dst: Ipv4Addr) -> bool {
        let sender = *self
            .sender
            .get_or_insert_with(|| sender_address(src, dst, self.direction));
        src == sender
    }
}

/// Streaming two-pass matcher: feed the whole sender capture, then the
/// receiver capture, then call [`Matcher::finish`].
pub struct Matcher {
    ends: Endpoints,
    base_us: u64,
    departures: HashMap<Digest, Departure>,
    sender_index: u64,
    out: FlowAnalysis,
}

impl Matcher {
    pub fn new(direction: Direction, base_us: u64) -> Self {
        Matcher {
            ends: Endpoints { direction, sender: None },
            base_us,
            departures: HashMap::new(),
            sender_index: 0,
            out: FlowAnalysis {
                log: FlowLog::default(),
                sender: CaptureCounts::default(),
                receiver: CaptureCounts::default(),
                matched_packets: 0,
                phantom_packets: 0,
                phantom_bytes: 0,
                lost_packets: 0,
                peak_map_len: 0,
            },
        }
    }

    /// One record of the sender capture.
    pub fn departure(&mut self, record: &PacketRecord) -> Result<()> {
        self.sender_index += 1;
        let out = &mut self.out;
        out.sender.packets += 1;
        out.sender.bytes += record.orig_len as u64;
        let Some(ip) = parse_ipv4(&record.data) else { return Ok(()) };
        if !self.ends.is_from_sender(ip.src, ip.dst) {
            return Ok(());
        }
        out.sender.flow_packets += 1;
        out.sender.flow_bytes += ip.total_len as u64;
        let departure = Departure {
            time_us: record.ts_us,
            size: ip.total_len as u32,
            index: self.sender_index,
        };
        if let Some(first) = self.departures.insert(digest(ip.ip_id, ip.payload), departure) {
            return Err(Error::DigestCollision {
                first: first.index,
                second: self.sender_index,
            });
        }
        out.peak_map_len = out.peak_map_len.max(self.departures.len());
        Ok(())
    }

    /// One record of the receiver capture.
    pub fn arrival(&mut self, record: &PacketRecord) {
        let out = &mut self.out;
        out.receiver.packets += 1;
        out.receiver.bytes += record.orig_len as u64;
        let Some(ip) = parse_ipv4(&record.data) else { return };
        if !self.ends.is_from_sender(ip.src, ip.dst) {
            return;
        }
        out.receiver.flow_packets += 1;
        out.receiver.flow_bytes += ip.total_len as u64;
        match self.departures.remove(&digest(ip.ip_id, ip.payload)) {
            Some(d) => {
                out.matched_packets += 1;
                let arrival = record.ts_us.saturating_sub(self.base_us);
                let delay = record.ts_us as i64 - d.time_us as i64;
                out.log.push(arrival as f64 / 1e6, delay as f64 / 1e6, d.size);
            }
            None => {
                out.phantom_packets += 1;
                out.phantom_bytes += ip.total_len as u64;
            }
        }
    }

    pub fn finish(mut self) -> FlowAnalysis {
        self.out.lost_packets = self.departures.len() as u64;
        self.out.log.bytes_lost = self.departures.values().map(|d| d.size as u64).sum();
        self.out.log.bytes_sent = self.out.sender.flow_bytes + self.out.phantom_bytes;
        self.out
    }
}

/// Matches a sender capture against a receiver capture. `base_us` is
/// subtracted from every arrival timestamp.
pub fn analyze_records<S, R>(sender: S, receiver: R, direction: Direction, base_us: u64) -> Result<FlowAnalysis>
where
    S: IntoIterator<Item = Result<PacketRecord>>,
    R: IntoIterator<Item = Result<PacketRecord>>,
{
    let mut m = Matcher::new(direction, base_us);
    for record in sender {
        m.departure(&record?)?;
    }
    for record in receiver {
        m.arrival(&record?);
    }
    Ok(m.finish())
}

/// Analyzes one flow's capture files. `on_percent` is told each time another
/// whole percent of the pair's bytes has been read.
pub fn analyze_flow(
    sender: &Path,
    receiver: &Path,
    direction: Direction,
    base_us: u64,
    on_percent: &mut dyn FnMut(u32),
) -> Result<FlowAnalysis> {
    let size = |p: &Path| fs::metadata(p).map(|m| m.len()).map_err(|e| Error::io(p, e));
    let sender_len = size(sender)?;
    let total = sender_len + size(receiver)?;
    let mut last = 0;
    let mut report = |pos: u64| {
        let percent = (pos * 100).checked_div(total).unwrap_or(100) as u32;
        if percent > last {
            last = percent;
            on_percent(percent);
        }
    };

    let mut m = Matcher::new(direction, base_us);
    let mut reader = PcapReader::open(sender)?;
    while let Some(r) = reader.next_record()? {
        m.departure(&r)?;
        report(reader.offset());
    }
    let mut reader = PcapReader::open(receiver)?;
    while let Some(r) = reader.next_record()? {
        m.arrival(&r);
        report(sender_len + reader.offset());
    }
    Ok(m.finish())
}

/// Writes `data-<flow>.log` into `dir`.
pub fn write_flow_log(log: &FlowLog, flow_number: usize, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(flow_log_name(flow_number));
    fs::write(&path, log.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn flow_log_name(flow_number: usize) -> String {
    format!("data-{flow_number}.log")
}

/// Progress notifications from [`analyze_dir`].
#[derive(Debug, Clone, PartialEq)]
pub enum Progress {
    /// A flow's analysis begins.
    Flow { number: usize, scheme: String, direction: Direction },
    /// Percentage of the current flow's capture bytes processed.
    Percent { percent: u32, elapsed_secs: f64 },
    /// Human-readable summary line.
    Line(String),
}

/// Analyzes every flow described by `<input>/metadata.json`, writing one flow
/// log per flow and a copy of the metadata into `output`.
pub fn analyze_dir(input: &Path, output: &Path, progress: &mut dyn FnMut(Progress)) -> Result<Vec<FlowAnalysis>> {
    let meta_path = input.join(METADATA_FILE);
    let meta = load_metadata(&meta_path)?;
    let flows = meta.flows();

    let mut pairs = Vec::with_capacity(flows.len());
    for (i, (scheme, _)) in flows.iter().enumerate() {
        let pair = [Role::Sender, Role::Receiver].map(|role| input.join(capture_file_name(i + 1, scheme, role)));
        for (path, role) in pair.iter().zip([Role::Sender, Role::Receiver]) {
            if !path.is_file() {
                return Err(Error::Flow {
                    flow: i + 1,
                    reason: format!("missing {} capture {}", role.as_str(), path.display()),
                });
            }
        }
        pairs.push(pair);
    }
    let all: Vec<PathBuf> = pairs.iter().flatten().cloned().collect();
    let base = base_time(&all)?;

    fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let meta_copy = output.join(METADATA_FILE);
    fs::copy(&meta_path, &meta_copy).map_err(|e| Error::io(&meta_copy, e))?;

    let mut results = Vec::with_capacity(flows.len());
    for (i, ((scheme, direction), [sender, receiver])) in flows.iter().zip(&pairs).enumerate() {
        let number = i + 1;
        progress(Progress::Flow {
            number,
            scheme: scheme.clone(),
            direction: *direction,
        });
        let started = Instant::now();
        let analysis = analyze_flow(sender, receiver, *direction, base, &mut |percent| {
            progress(Progress::Percent {
                percent,
                elapsed_secs: started.elapsed().as_secs_f64(),
            })
        })
        .map_err(|e| match e {
            Error::DigestCollision { .. } => Error::Flow {
                flow: number,
                reason: e.to_string(),
            },
            other => other,
        })?;
        for line in summary_lines(&analysis, sender, receiver) {
            progress(Progress::Line(line));
        }
        write_flow_log(&analysis.log, number, output)?;
        results.push(analysis);
    }
    Ok(results)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Console summary of one flow.
pub fn summary_lines(a: &FlowAnalysis, sender: &Path, receiver: &Path) -> Vec<String> {
    let counts = |label: &str, path: &Path, c: &CaptureCounts| {
        format!(
            "  {label} {}: {} packets / {} bytes in total, {} packets / {} bytes from the sender",
            file_name(path),
            c.packets,
            c.bytes,
            c.flow_packets,
            c.flow_bytes
        )
    };
    let loss = match a.log.loss_percent() {
        Some(p) => format!("{p:.4}%"),
        None => "n/a (nothing sent)".into(),
    };
    vec![
        counts("sender dump  ", sender, &a.sender),
        counts("receiver dump", receiver, &a.receiver),
        format!(
            "  matched {} packets, phantom {} packets / {} bytes, lost {} packets",
            a.matched_packets, a.phantom_packets, a.phantom_bytes, a.lost_packets
        ),
        format!("  bytes sent {}, bytes lost {}, loss {loss}", a.log.bytes_sent, a.log.bytes_lost),
    ]
}
