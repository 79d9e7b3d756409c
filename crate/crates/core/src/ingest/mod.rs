//! Capture reading and header decoding.

mod decode;
mod pcap;

use std::net::Ipv4Addr;
use std::path::Path;

pub use decode::{decode_packet, Decoded, MalformedHeader, SkipReason};
pub use pcap::{Frame, PcapReader, TimestampResolution, LINKTYPE_ETHERNET};

use crate::error::Result;

pub const PROTO_ICMP: u8 = 1;
pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcpInfo {
    pub flags: u8,
    pub seq: u32,
    /// Segment payload length derived from the IP and TCP header lengths,
    /// independent of how many bytes were captured.
    pub payload_len: u32,
    pub window: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IcmpInfo {
    pub icmp_type: u8,
    pub code: u8,
}

/// One decoded IPv4 packet.
///
/// `tcp` is only ever set for protocol 6 and `icmp` for protocol 1. They
/// are absent for fragments with a nonzero offset and for packets whose
/// transport header was cut off by the snap length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub timestamp_us: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub l4_protocol: u8,
    /// The IP header total-length field.
    pub ip_total_length: u16,
    pub ttl: u8,
    pub tcp: Option<TcpInfo>,
    pub icmp: Option<IcmpInfo>,
    /// Captured transport payload (bounded by the IP total length).
    pub payload: Vec<u8>,
}

/// Per-capture decode counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub frames: u64,
    pub decoded: u64,
    pub ipv6: u64,
    pub non_ipv4: u64,
    pub stacked_vlan: u64,
    pub malformed: u64,
}

impl IngestStats {
    pub fn skipped(&self) -> u64 {
        self.ipv6 + self.non_ipv4 + self.stacked_vlan + self.malformed
    }

    pub fn record(&mut self, decoded: &Decoded) {
        self.frames += 1;
        match decoded {
            Decoded::Packet(_) => self.decoded += 1,
            Decoded::Skip(SkipReason::Ipv6) => self.ipv6 += 1,
            Decoded::Skip(SkipReason::NotIpv4 { .. }) => self.non_ipv4 += 1,
            Decoded::Skip(SkipReason::StackedVlan) => self.stacked_vlan += 1,
            Decoded::Skip(SkipReason::Malformed(_)) => self.malformed += 1,
        }
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.frames += other.frames;
        self.decoded += other.decoded;
        self.ipv6 += other.ipv6;
        self.non_ipv4 += other.non_ipv4;
        self.stacked_vlan += other.stacked_vlan;
        self.malformed += other.malformed;
    }
}

/// A capture file opened for decoding.
pub struct Capture {
    reader: PcapReader<std::io::BufReader<std::fs::File>>,
}

impl Capture {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Capture {
            reader: PcapReader::open(path)?,
        })
    }

    pub fn reader(&self) -> &PcapReader<std::io::BufReader<std::fs::File>> {
        &self.reader
    }

    /// Decoded IPv4 packets in file order. Skipped frames are counted in
    /// [`Packets::stats`].
    pub fn packets(self) -> Packets<std::io::BufReader<std::fs::File>> {
        Packets::new(self.reader)
    }
}

/// Iterator adapter that decodes frames and drops the ones that are skipped.
pub struct Packets<R> {
    reader: PcapReader<R>,
    stats: IngestStats,
}

impl<R: std::io::Read> Packets<R> {
    pub fn new(reader: PcapReader<R>) -> Self {
        Packets {
            reader,
            stats: IngestStats::default(),
        }
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }
}

impl<R: std::io::Read> Iterator for Packets<R> {
    type Item = Result<PacketRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let link_type = self.reader.link_type();
        loop {
            let frame = match self.reader.next()? {
                Ok(frame) => frame,
                Err(e) => return Some(Err(e)),
            };
            let decoded = decode_packet(&frame.data, frame.timestamp_us, link_type);
            self.stats.record(&decoded);
            if let Decoded::Packet(pkt) = decoded {
                return Some(Ok(pkt));
            }
        }
    }
}
