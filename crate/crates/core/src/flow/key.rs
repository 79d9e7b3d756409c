use std::fmt;
use std::net::Ipv4Addr;

use crate::ingest::PacketRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

/// Oriented five-tuple. The client is the source of the first packet seen.
///
/// Ordering is lexicographic over (client_ip, server_ip, client_port,
/// server_port, l4_protocol), which is the tie-break used wherever flows
/// are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub client_ip: Ipv4Addr,
    pub server_ip: Ipv4Addr,
    pub client_port: u16,
    pub server_port: u16,
    pub l4_protocol: u8,
}

impl FlowKey {
    pub fn from_packet(pkt: &PacketRecord) -> Self {
        FlowKey {
            client_ip: pkt.src_ip,
            server_ip: pkt.dst_ip,
            client_port: pkt.src_port,
            server_port: pkt.dst_port,
            l4_protocol: pkt.l4_protocol,
        }
    }

    pub fn reversed(&self) -> Self {
        FlowKey {
            client_ip: self.server_ip,
            server_ip: self.client_ip,
            client_port: self.server_port,
            server_port: self.client_port,
            l4_protocol: self.l4_protocol,
        }
    }

    /// Orientation-free identity: two packets share a flow iff their
    /// canonical keys are equal.
    pub fn canonical(&self) -> CanonicalKey {
        canonical(
            self.client_ip,
            self.client_port,
            self.server_ip,
            self.server_port,
            self.l4_protocol,
        )
    }

    pub fn matches(&self, pkt: &PacketRecord) -> bool {
        self.canonical() == CanonicalKey::of(pkt)
    }

    /// Direction of a packet that belongs to this flow.
    pub fn direction_of(&self, pkt: &PacketRecord) -> Direction {
        if pkt.src_ip == self.client_ip
            && pkt.src_port == self.client_port
            && pkt.dst_ip == self.server_ip
            && pkt.dst_port == self.server_port
        {
            Direction::ClientToServer
        } else {
            Direction::ServerToClient
        }
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} -> {}:{} proto {}",
            self.client_ip, self.client_port, self.server_ip, self.server_port, self.l4_protocol
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    low: u64,
    high: u64,
    protocol: u8,
}

impl CanonicalKey {
    pub fn of(pkt: &PacketRecord) -> Self {
        canonical(pkt.src_ip, pkt.src_port, pkt.dst_ip, pkt.dst_port, pkt.l4_protocol)
    }

    /// Stable, process-independent hash used to shard flows across workers.
    pub fn shard_hash(&self) -> u64 {
        let mut h = self.low.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= self.high.wrapping_add(0x632b_e59b_d9b4_e019).rotate_left(29);
        h ^= self.protocol as u64;
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^ (h >> 33)
    }
}

fn canonical(a_ip: Ipv4Addr, a_port: u16, b_ip: Ipv4Addr, b_port: u16, protocol: u8) -> CanonicalKey {
    let a = ((u32::from(a_ip) as u64) << 16) | a_port as u64;
    let b = ((u32::from(b_ip) as u64) << 16) | b_port as u64;
    CanonicalKey {
        low: a.min(b),
        high: a.max(b),
        protocol,
    }
}
