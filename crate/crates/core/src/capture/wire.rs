//! Byte layout of simulated packets: IPv4 with TCP or UDP, checksums included.

use std::net::Ipv4Addr;

use crate::emulator::{Payload, Protocol, SimPacket};

const TTL: u8 = 64;
const DONT_FRAGMENT: u16 = 0x4000;
const TCP_ACK: u8 = 0x10;
const TCP_PSH: u8 = 0x08;
const TCP_WINDOW: u16 = 0xffff;

fn checksum_add(mut sum: u32, bytes: &[u8]) -> u32 {
    let mut chunks = bytes.chunks_exact(2);
    for c in &mut chunks {
        sum += u16::from_be_bytes([c[0], c[1]]) as u32;
    }
    if let [last] = chunks.remainder() {
        sum += (*last as u32) << 8;
    }
    sum
}

fn checksum_fold(mut sum: u32) -> u16 {
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// Internet checksum of `bytes`.
pub fn internet_checksum(bytes: &[u8]) -> u16 {
    checksum_fold(checksum_add(0, bytes))
}

fn stream_offset(isn: u32, segment: u64, mss: u32) -> u32 {
    isn.wrapping_add(1).wrapping_add((segment * mss as u64) as u32)
}

/// Appends the raw IPv4 datagram for `p` to `buf`.
pub fn encode(p: &SimPacket, buf: &mut Vec<u8>) {
    let start = buf.len();
    let total = p.size() as usize;
    buf.reserve(total);

    buf.extend_from_slice(&[0x45, 0]);
    buf.extend_from_slice(&(total as u16).to_be_bytes());
    buf.extend_from_slice(&p.ip_id.to_be_bytes());
    buf.extend_from_slice(&DONT_FRAGMENT.to_be_bytes());
    buf.extend_from_slice(&[TTL, p.protocol().number(), 0, 0]);
    buf.extend_from_slice(&p.src.octets());
    buf.extend_from_slice(&p.dst.octets());
    let ip_sum = internet_checksum(&buf[start..start + 20]);
    buf[start + 10..start + 12].copy_from_slice(&ip_sum.to_be_bytes());

    let l4 = buf.len();
    buf.extend_from_slice(&p.src_port.to_be_bytes());
    buf.extend_from_slice(&p.dst_port.to_be_bytes());
    match &p.payload {
        Payload::TcpData { seq, len, ts_val, ts_ecr } => {
            let first_byte = stream_offset(p.isn, *seq, p.mss);
            tcp_header(buf, first_byte, p.peer_isn.wrapping_add(1), TCP_ACK | TCP_PSH, p.tcp_options_len());
            timestamp_option(buf, *ts_val, *ts_ecr);
            // Payload bytes follow the stream position so every segment differs.
            buf.extend((0..*len).map(|i| first_byte.wrapping_add(i) as u8));
        }
        Payload::TcpAck { ack, sack, ts_val, ts_ecr } => {
            let ack_field = stream_offset(p.peer_isn, *ack, p.mss);
            tcp_header(buf, p.isn.wrapping_add(1), ack_field, TCP_ACK, p.tcp_options_len());
            timestamp_option(buf, *ts_val, *ts_ecr);
            if sack.len > 0 {
                buf.extend_from_slice(&[1, 1, 5, 2 + 8 * sack.len]);
                for &(s, e) in sack.as_slice() {
                    buf.extend_from_slice(&stream_offset(p.peer_isn, s, p.mss).to_be_bytes());
                    buf.extend_from_slice(&stream_offset(p.peer_isn, e, p.mss).to_be_bytes());
                }
            }
        }
        Payload::UdpData { seq, sent, len } => {
            buf.extend_from_slice(&((8 + len) as u16).to_be_bytes());
            buf.extend_from_slice(&[0, 0]);
            buf.extend_from_slice(&seq.to_be_bytes());
            buf.extend_from_slice(&sent.to_be_bytes());
            buf.resize(buf.len() + (*len as usize).saturating_sub(16), 0);
        }
        Payload::UdpAck { seq, echo } => {
            buf.extend_from_slice(&((8 + p.payload_len()) as u16).to_be_bytes());
            buf.extend_from_slice(&[0, 0]);
            buf.extend_from_slice(&seq.to_be_bytes());
            buf.extend_from_slice(&echo.to_be_bytes());
        }
    }
    debug_assert_eq!(buf.len() - start, total);

    // Transport checksum over the pseudo-header and segment.
    let seg_len = (buf.len() - l4) as u32;
    let mut sum = checksum_add(0, &p.src.octets());
    sum = checksum_add(sum, &p.dst.octets());
    sum += p.protocol().number() as u32 + seg_len;
    sum = checksum_add(sum, &buf[l4..]);
    let mut csum = checksum_fold(sum);
    let offset = match p.protocol() {
        Protocol::Tcp => 16,
        Protocol::Udp => {
            if csum == 0 {
                csum = 0xffff;
            }
            6
        }
    };
    buf[l4 + offset..l4 + offset + 2].copy_from_slice(&csum.to_be_bytes());
}

fn tcp_header(buf: &mut Vec<u8>, seq: u32, ack: u32, flags: u8, options: u32) {
    buf.extend_from_slice(&seq.to_be_bytes());
    buf.extend_from_slice(&ack.to_be_bytes());
    buf.push((((20 + options) / 4) as u8) << 4);
    buf.push(flags);
    buf.extend_from_slice(&TCP_WINDOW.to_be_bytes());
    buf.extend_from_slice(&[0, 0, 0, 0]);
}

fn timestamp_option(buf: &mut Vec<u8>, ts_val: u32, ts_ecr: u32) {
    buf.extend_from_slice(&[1, 1, 8, 10]);
    buf.extend_from_slice(&ts_val.to_be_bytes());
    buf.extend_from_slice(&ts_ecr.to_be_bytes());
}

/// Fields of an IPv4 header the analysis needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ipv4View<'a> {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub protocol: u8,
    pub ip_id: u16,
    pub total_len: u16,
    /// Everything after the IP header, up to the total length.
    pub payload: &'a [u8],
}

/// Parses an IPv4 datagram; `None` for other versions or malformed headers.
pub fn parse_ipv4(bytes: &[u8]) -> Option<Ipv4View<'_>> {
    if bytes.len() < 20 || bytes[0] >> 4 != 4 {
        return None;
    }
    let ihl = (bytes[0] & 0x0f) as usize * 4;
    let total_len = u16::from_be_bytes([bytes[2], bytes[3]]);
    if ihl < 20 || (total_len as usize) < ihl {
        return None;
    }
    let end = (total_len as usize).min(bytes.len());
    Some(Ipv4View {
        src: Ipv4Addr::new(bytes[12], bytes[13], bytes[14], bytes[15]),
        dst: Ipv4Addr::new(bytes[16], bytes[17], bytes[18], bytes[19]),
        protocol: bytes[9],
        ip_id: u16::from_be_bytes([bytes[4], bytes[5]]),
        total_len,
        payload: bytes.get(ihl..end)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::{tcp_mss, SackBlocks};

    fn packet(payload: Payload) -> SimPacket {
        SimPacket {
            flow: 0,
            src: Ipv4Addr::new(10, 0, 0, 1),
            dst: Ipv4Addr::new(10, 0, 0, 5),
            src_port: 40000,
            dst_port: 5201,
            ip_id: 7,
            isn: 1000,
            peer_isn: 2000,
            mss: tcp_mss(),
            payload,
        }
    }

    #[test]
    fn checksums_verify() {
        let mut sack = SackBlocks::default();
        sack.push((4, 6));
        for payload in [
            Payload::TcpData { seq: 3, len: 1448, ts_val: 5, ts_ecr: 6 },
            Payload::TcpAck { ack: 3, sack, ts_val: 5, ts_ecr: 6 },
            Payload::UdpData { seq: 1, sent: 2, len: 1472 },
            Payload::UdpAck { seq: 1, echo: 2 },
        ] {
            let p = packet(payload);
            let mut buf = Vec::new();
            encode(&p, &mut buf);
            assert_eq!(buf.len() as u32, p.size());
            assert_eq!(internet_checksum(&buf[..20]), 0);
            let view = parse_ipv4(&buf).unwrap();
            assert_eq!(view.ip_id, 7);
            assert_eq!(view.total_len as u32, p.size());
            let mut pseudo = Vec::new();
            pseudo.extend_from_slice(&view.src.octets());
            pseudo.extend_from_slice(&view.dst.octets());
            pseudo.extend_from_slice(&[0, view.protocol]);
            pseudo.extend_from_slice(&(view.payload.len() as u16).to_be_bytes());
            pseudo.extend_from_slice(view.payload);
            assert_eq!(internet_checksum(&pseudo), 0);
        }
    }

    #[test]
    fn tcp_sequence_numbers_in_bytes() {
        let mut buf = Vec::new();
        encode(&packet(Payload::TcpData { seq: 2, len: 1448, ts_val: 0, ts_ecr: 0 }), &mut buf);
        let seq = u32::from_be_bytes(buf[24..28].try_into().unwrap());
        assert_eq!(seq, 1001 + 2 * 1448);
        let ack = u32::from_be_bytes(buf[28..32].try_into().unwrap());
        assert_eq!(ack, 2001);
        assert_eq!(buf[32] >> 4, 8);
    }

    #[test]
    fn rejects_non_ipv4() {
        assert!(parse_ipv4(&[0x60; 40]).is_none());
        assert!(parse_ipv4(&[0x45; 10]).is_none());
    }
}
