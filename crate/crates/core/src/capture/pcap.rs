//! Classic libpcap files with raw IPv4 records.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MAGIC: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
pub const VERSION_MAJOR: u16 = 2;
pub const VERSION_MINOR: u16 = 4;
pub const SNAPLEN: u32 = 262_144;
/// LINKTYPE_RAW: records start with an IPv4 or IPv6 header.
pub const LINKTYPE_RAW: u32 = 101;
/// LINKTYPE_IPV4.
pub const LINKTYPE_IPV4: u32 = 228;
pub const GLOBAL_HEADER_LEN: u64 = 24;
const RECORD_HEADER_LEN: u64 = 16;

/// One captured packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    /// Microseconds since the UNIX epoch.
    pub ts_us: u64,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

impl PacketRecord {
    pub fn new(ts_us: u64, data: Vec<u8>) -> Self {
        PacketRecord {
            ts_us,
            orig_len: data.len() as u32,
            data,
        }
    }

    pub fn ts_secs(&self) -> f64 {
        self.ts_us as f64 / 1e6
    }
}

pub struct PcapWriter<W: Write> {
    out: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        out.write_all(&MAGIC.to_le_bytes())?;
        out.write_all(&VERSION_MAJOR.to_le_bytes())?;
        out.write_all(&VERSION_MINOR.to_le_bytes())?;
        out.write_all(&0i32.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&SNAPLEN.to_le_bytes())?;
        out.write_all(&LINKTYPE_RAW.to_le_bytes())?;
        Ok(PcapWriter { out })
    }

    pub fn write_packet(&mut self, ts_us: u64, data: &[u8]) -> io::Result<()> {
        let caplen = data.len().min(SNAPLEN as usize);
        self.out.write_all(&((ts_us / 1_000_000) as u32).to_le_bytes())?;
        self.out.write_all(&((ts_us % 1_000_000) as u32).to_le_bytes())?;
        self.out.write_all(&(caplen as u32).to_le_bytes())?;
        self.out.write_all(&(data.len() as u32).to_le_bytes())?;
        self.out.write_all(&data[..caplen])
    }

    pub fn write_record(&mut self, r: &PacketRecord) -> io::Result<()> {
        self.write_packet(r.ts_us, &r.data)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Writes `records` to a new file at `path`.
pub fn write_capture(path: &Path, records: &[PacketRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = PcapWriter::new(BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    for r in records {
        w.write_record(r).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Streaming reader; holds one record at a time.
pub struct PcapReader<R: Read> {
    input: R,
    path: PathBuf,
    swapped: bool,
    nanos: bool,
    offset: u64,
    pub linktype: u32,
    pub snaplen: u32,
}

impl PcapReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        PcapReader::new(BufReader::with_capacity(1 << 20, file), path)
    }
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

impl<R: Read> PcapReader<R> {
    /// Reads and validates the global header. `path` is only used in errors.
    pub fn new(mut input: R, path: &Path) -> Result<Self> {
        let path = path.to_path_buf();
        let mut header = [0u8; GLOBAL_HEADER_LEN as usize];
        let n = read_full(&mut input, &mut header).map_err(|e| Error::io(&path, e))?;
        let malformed = |offset: u64, reason: &str| Error::Capture {
            path: path.clone(),
            offset,
            reason: reason.to_string(),
        };
        if n < header.len() {
            return Err(malformed(n as u64, "truncated global header"));
        }
        let magic_le = u32::from_le_bytes(header[0..4].try_into().unwrap());
        let (swapped, nanos) = match magic_le {
            MAGIC => (false, false),
            MAGIC_NANOS => (false, true),
            m if m.swap_bytes() == MAGIC => (true, false),
            m if m.swap_bytes() == MAGIC_NANOS => (true, true),
            _ => return Err(malformed(0, "bad magic number")),
        };
        let u16_at = |i: usize| {
            let v = u16::from_le_bytes(header[i..i + 2].try_into().unwrap());
            if swapped { v.swap_bytes() } else { v }
        };
        let u32_at = |i: usize| {
            let v = u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
            if swapped { v.swap_bytes() } else { v }
        };
        if u16_at(4) != VERSION_MAJOR {
            return Err(malformed(4, &format!("unsupported version {}.{}", u16_at(4), u16_at(6))));
        }
        let snaplen = u32_at(16);
        let linktype = u32_at(20) & 0x0fff_ffff;
        if linktype != LINKTYPE_RAW && linktype != LINKTYPE_IPV4 {
            return Err(Error::UnsupportedLinkType { path, linktype });
        }
        Ok(PcapReader {
            input,
            path,
            swapped,
            nanos,
            offset: GLOBAL_HEADER_LEN,
            linktype,
            snaplen,
        })
    }

    /// Bytes consumed so far, headers included.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn u32(&self, b: &[u8]) -> u32 {
        let v = u32::from_le_bytes(b.try_into().unwrap());
        if self.swapped { v.swap_bytes() } else { v }
    }

    /// Next record, `Ok(None)` at a clean end of file.
    pub fn next_record(&mut self) -> Result<Option<PacketRecord>> {
        let mut header = [0u8; RECORD_HEADER_LEN as usize];
        let n = read_full(&mut self.input, &mut header).map_err(|e| Error::io(&self.path, e))?;
        if n == 0 {
            return Ok(None);
        }
        let start = self.offset;
        if n < header.len() {
            return Err(Error::Capture {
                path: self.path.clone(),
                offset: start,
                reason: format!("truncated record header ({n} of 16 bytes)"),
            });
        }
        let sec = self.u32(&header[0..4]) as u64;
        let frac = self.u32(&header[4..8]) as u64;
        let caplen = self.u32(&header[8..12]);
        let orig_len = self.u32(&header[12..16]);
        if caplen > self.snaplen.max(SNAPLEN) {
            return Err(Error::Capture {
                path: self.path.clone(),
                offset: start,
                reason: format!("record length {caplen} exceeds the snapshot length"),
            });
        }
        let mut data = vec![0u8; caplen as usize];
        let got = read_full(&mut self.input, &mut data).map_err(|e| Error::io(&self.path, e))?;
        if got < data.len() {
            return Err(Error::Capture {
                path: self.path.clone(),
                offset: start,
                reason: format!("truncated record: {got} of {caplen} bytes"),
            });
        }
        self.offset += RECORD_HEADER_LEN + caplen as u64;
        let usec = if self.nanos { frac / 1_000 } else { frac };
        Ok(Some(PacketRecord {
            ts_us: sec * 1_000_000 + usec,
            orig_len,
            data,
        }))
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<PacketRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Opens `path` for streaming.
pub fn read_capture(path: &Path) -> Result<PcapReader<BufReader<File>>> {
    PcapReader::open(path)
}
