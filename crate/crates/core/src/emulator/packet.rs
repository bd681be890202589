use std::net::Ipv4Addr;

pub const IPV4_HEADER: u32 = 20;
pub const TCP_HEADER: u32 = 20;
/// NOP, NOP, timestamp option.
pub const TCP_TIMESTAMP_OPTION: u32 = 12;
pub const UDP_HEADER: u32 = 8;
/// Sequence number and send timestamp carried by feedback datagrams.
pub const UDP_ACK_PAYLOAD: u32 = 16;
pub const MTU: u32 = 1500;
pub const MAX_SACK_BLOCKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Tcp,
    Udp,
}

impl Protocol {
    pub fn number(self) -> u8 {
        match self {
            Protocol::Tcp => 6,
            Protocol::Udp => 17,
        }
    }
}

/// Up to three selective-acknowledgment ranges `[start, end)` in segment
/// numbers, most recently changed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SackBlocks {
    pub len: u8,
    pub blocks: [(u64, u64); MAX_SACK_BLOCKS],
}

impl SackBlocks {
    pub fn as_slice(&self) -> &[(u64, u64)] {
        &self.blocks[..self.len as usize]
    }

    pub fn push(&mut self, block: (u64, u64)) {
        if (self.len as usize) < MAX_SACK_BLOCKS {
            self.blocks[self.len as usize] = block;
            self.len += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// One full-sized segment; `seq` counts segments from zero.
    TcpData { seq: u64, len: u32, ts_val: u32, ts_ecr: u32 },
    /// `ack` is the next segment expected.
    TcpAck { ack: u64, sack: SackBlocks, ts_val: u32, ts_ecr: u32 },
    UdpData { seq: u64, sent: u64, len: u32 },
    UdpAck { seq: u64, echo: u64 },
}

/// A packet in flight through the simulated network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimPacket {
    /// Zero-based flow index.
    pub flow: u32,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub ip_id: u16,
    /// Initial sequence number of the byte stream this packet belongs to.
    pub isn: u32,
    /// Initial sequence number of the reverse stream, used in ack fields.
    pub peer_isn: u32,
    /// Segment size used to map segment numbers to byte offsets.
    pub mss: u32,
    pub payload: Payload,
}

impl SimPacket {
    pub fn protocol(&self) -> Protocol {
        match self.payload {
            Payload::TcpData { .. } | Payload::TcpAck { .. } => Protocol::Tcp,
            Payload::UdpData { .. } | Payload::UdpAck { .. } => Protocol::Udp,
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self.payload, Payload::TcpData { .. } | Payload::UdpData { .. })
    }

    /// Bytes of transport-layer payload.
    pub fn payload_len(&self) -> u32 {
        match &self.payload {
            Payload::TcpData { len, .. } | Payload::UdpData { len, .. } => *len,
            Payload::TcpAck { .. } => 0,
            Payload::UdpAck { .. } => UDP_ACK_PAYLOAD,
        }
    }

    /// Length of the TCP options, padded to a multiple of four.
    pub fn tcp_options_len(&self) -> u32 {
        match &self.payload {
            Payload::TcpData { .. } => TCP_TIMESTAMP_OPTION,
            // NOP, NOP, kind, length, then eight bytes per block.
            Payload::TcpAck { sack, .. } if sack.len > 0 => TCP_TIMESTAMP_OPTION + 4 + 8 * sack.len as u32,
            Payload::TcpAck { .. } => TCP_TIMESTAMP_OPTION,
            _ => 0,
        }
    }

    /// Total IP datagram length.
    pub fn size(&self) -> u32 {
        let transport = match self.protocol() {
            Protocol::Tcp => TCP_HEADER + self.tcp_options_len(),
            Protocol::Udp => UDP_HEADER,
        };
        IPV4_HEADER + transport + self.payload_len()
    }
}

/// Largest TCP payload that fits the MTU with the timestamp option.
pub fn tcp_mss() -> u32 {
    MTU - IPV4_HEADER - TCP_HEADER - TCP_TIMESTAMP_OPTION
}

pub fn udp_payload() -> u32 {
    MTU - IPV4_HEADER - UDP_HEADER
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(payload: Payload) -> SimPacket {
        SimPacket {
            flow: 0,
            src: Ipv4Addr::new(10, 0, 0, 1),
            dst: Ipv4Addr::new(10, 0, 0, 5),
            src_port: 40000,
            dst_port: 5201,
            ip_id: 0,
            isn: 0,
            peer_isn: 0,
            mss: tcp_mss(),
            payload,
        }
    }

    #[test]
    fn header_arithmetic() {
        assert_eq!(tcp_mss(), 1448);
        let data = packet(Payload::TcpData { seq: 0, len: 1448, ts_val: 0, ts_ecr: 0 });
        assert_eq!(data.size(), 1500);
        let small = packet(Payload::TcpData { seq: 0, len: 1400, ts_val: 0, ts_ecr: 0 });
        assert_eq!(small.size(), 20 + 20 + 1400 + 12);
        let ack = packet(Payload::TcpAck { ack: 1, sack: SackBlocks::default(), ts_val: 0, ts_ecr: 0 });
        assert_eq!(ack.size(), 52);
        let mut sack = SackBlocks::default();
        sack.push((3, 4));
        sack.push((6, 9));
        let ack = packet(Payload::TcpAck { ack: 1, sack, ts_val: 0, ts_ecr: 0 });
        assert_eq!(ack.size(), 52 + 4 + 16);
        let udp = packet(Payload::UdpData { seq: 0, sent: 0, len: udp_payload() });
        assert_eq!(udp.size(), 1500);
    }
}
