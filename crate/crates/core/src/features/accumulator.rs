use super::dns::{parse_dns, DnsMessage};
use super::ftp::parse_ftp_response;
use super::l7::L7Table;
use super::record::FlowRecord;
use super::retrans::SequenceTracker;
use crate::error::{Error, Result};
use crate::flow::{Direction, FlowKey};
use crate::ingest::{IcmpInfo, PacketRecord, PROTO_TCP, PROTO_UDP};

/// Upper bounds (inclusive) of the five IP-size buckets. Packets above the
/// last bound fall in no bucket.
pub const SIZE_BUCKET_LIMITS: [u16; 5] = [128, 256, 512, 1024, 1514];

const DNS_PORT: u16 = 53;
const FTP_CONTROL_PORT: u16 = 21;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectionStats {
    pub bytes: u64,
    pub packets: u64,
    pub first_us: u64,
    pub last_us: u64,
    pub tcp_flags: u8,
    pub max_window: u16,
    pub retransmitted_bytes: u64,
    pub retransmitted_packets: u64,
    pub sequence: SequenceTracker,
}

impl DirectionStats {
    fn add(&mut self, pkt: &PacketRecord) {
        let ts = pkt.timestamp_us;
        if self.packets == 0 {
            self.first_us = ts;
            self.last_us = ts;
        } else {
            self.first_us = self.first_us.min(ts);
            self.last_us = self.last_us.max(ts);
        }
        self.packets += 1;
        self.bytes += pkt.ip_total_length as u64;
        if let Some(tcp) = pkt.tcp {
            self.tcp_flags |= tcp.flags;
            self.max_window = self.max_window.max(tcp.window);
            if self.sequence.observe(tcp.seq, tcp.payload_len) {
                self.retransmitted_packets += 1;
                self.retransmitted_bytes += pkt.ip_total_length as u64;
            }
        }
    }

    /// Whole milliseconds between this direction's first and last packet.
    pub fn duration_ms(&self) -> u64 {
        if self.packets < 2 {
            0
        } else {
            (self.last_us - self.first_us) / 1000
        }
    }
}

/// Mutable per-flow state.
#[derive(Debug, Clone)]
pub struct FlowAccumulator {
    key: FlowKey,
    first_seen_us: u64,
    last_seen_us: u64,
    client: DirectionStats,
    server: DirectionStats,
    min_ttl: u8,
    max_ttl: u8,
    min_ip_len: u16,
    max_ip_len: u16,
    size_buckets: [u64; 5],
    dns_query: Option<(u16, u16)>,
    dns_a_ttl: Option<u32>,
    ftp_code: Option<u16>,
    icmp: Option<IcmpInfo>,
}

impl FlowAccumulator {
    pub fn new(key: FlowKey) -> Self {
        FlowAccumulator {
            key,
            first_seen_us: 0,
            last_seen_us: 0,
            client: DirectionStats::default(),
            server: DirectionStats::default(),
            min_ttl: u8::MAX,
            max_ttl: 0,
            min_ip_len: u16::MAX,
            max_ip_len: 0,
            size_buckets: [0; 5],
            dns_query: None,
            dns_a_ttl: None,
            ftp_code: None,
            icmp: None,
        }
    }

    pub fn key(&self) -> &FlowKey {
        &self.key
    }

    pub fn first_seen_us(&self) -> u64 {
        self.first_seen_us
    }

    pub fn last_seen_us(&self) -> u64 {
        self.last_seen_us
    }

    pub fn packets(&self) -> u64 {
        self.client.packets + self.server.packets
    }

    pub fn client(&self) -> &DirectionStats {
        &self.client
    }

    pub fn server(&self) -> &DirectionStats {
        &self.server
    }

    pub fn size_buckets(&self) -> &[u64; 5] {
        &self.size_buckets
    }

    /// Folds one packet of this flow into the state.
    pub fn accumulate(&mut self, pkt: &PacketRecord, direction: Direction) {
        debug_assert!(self.key.matches(pkt));
        let ts = pkt.timestamp_us;
        if self.packets() == 0 {
            self.first_seen_us = ts;
            self.last_seen_us = ts;
        } else {
            self.first_seen_us = self.first_seen_us.min(ts);
            self.last_seen_us = self.last_seen_us.max(ts);
        }
        match direction {
            Direction::ClientToServer => self.client.add(pkt),
            Direction::ServerToClient => self.server.add(pkt),
        }

        self.min_ttl = self.min_ttl.min(pkt.ttl);
        self.max_ttl = self.max_ttl.max(pkt.ttl);
        let len = pkt.ip_total_length;
        self.min_ip_len = self.min_ip_len.min(len);
        self.max_ip_len = self.max_ip_len.max(len);
        if let Some(bucket) = SIZE_BUCKET_LIMITS.iter().position(|&limit| len <= limit) {
            self.size_buckets[bucket] += 1;
        }

        if self.icmp.is_none() {
            self.icmp = pkt.icmp;
        }
        if pkt.payload.is_empty() {
            return;
        }
        match pkt.l4_protocol {
            PROTO_UDP if pkt.src_port == DNS_PORT || pkt.dst_port == DNS_PORT => {
                self.observe_dns(&pkt.payload)
            }
            PROTO_TCP if pkt.src_port == FTP_CONTROL_PORT && pkt.tcp.is_some() => {
                if let Some(code) = parse_ftp_response(&pkt.payload) {
                    self.ftp_code = Some(code);
                }
            }
            _ => {}
        }
    }

    fn observe_dns(&mut self, payload: &[u8]) {
        match parse_dns(payload) {
            Some(DnsMessage::Query { id, qtype, .. }) => {
                self.dns_query.get_or_insert((id, qtype));
            }
            Some(DnsMessage::Response {
                first_a_ttl: Some(ttl),
                ..
            }) => {
                self.dns_a_ttl.get_or_insert(ttl);
            }
            _ => {}
        }
    }

    pub fn finalize(&self, l7: &L7Table) -> Result<FlowRecord> {
        if self.packets() == 0 {
            return Err(Error::EmptyFlow);
        }
        let duration_ms = (self.last_seen_us - self.first_seen_us) / 1000;
        let seconds = if duration_ms == 0 {
            1.0
        } else {
            duration_ms as f64 / 1000.0
        };
        let in_bytes = self.client.bytes;
        let out_bytes = self.server.bytes;
        let (icmp_type, icmp_ipv4_type) = match self.icmp {
            Some(i) => (i.icmp_type as u16 * 256 + i.code as u16, i.icmp_type),
            None => (0, 0),
        };
        let (dns_query_id, dns_query_type) = self.dns_query.unwrap_or((0, 0));
        Ok(FlowRecord {
            ipv4_src_addr: self.key.client_ip,
            ipv4_dst_addr: self.key.server_ip,
            l4_src_port: self.key.client_port,
            l4_dst_port: self.key.server_port,
            protocol: self.key.l4_protocol,
            l7_proto: l7.classify(&self.key),
            in_bytes,
            out_bytes,
            in_pkts: self.client.packets,
            out_pkts: self.server.packets,
            flow_duration_milliseconds: duration_ms,
            tcp_flags: self.client.tcp_flags | self.server.tcp_flags,
            client_tcp_flags: self.client.tcp_flags,
            server_tcp_flags: self.server.tcp_flags,
            duration_in: self.client.duration_ms(),
            duration_out: self.server.duration_ms(),
            min_ttl: self.min_ttl,
            max_ttl: self.max_ttl,
            longest_flow_pkt: self.max_ip_len,
            shortest_flow_pkt: self.min_ip_len,
            min_ip_pkt_len: self.min_ip_len,
            max_ip_pkt_len: self.max_ip_len,
            src_to_dst_second_bytes: in_bytes as f64 / seconds,
            dst_to_src_second_bytes: out_bytes as f64 / seconds,
            retransmitted_in_bytes: self.client.retransmitted_bytes,
            retransmitted_in_pkts: self.client.retransmitted_packets,
            retransmitted_out_bytes: self.server.retransmitted_bytes,
            retransmitted_out_pkts: self.server.retransmitted_packets,
            src_to_dst_avg_throughput: 8.0 * in_bytes as f64 / seconds,
            dst_to_src_avg_throughput: 8.0 * out_bytes as f64 / seconds,
            num_pkts_up_to_128_bytes: self.size_buckets[0],
            num_pkts_128_to_256_bytes: self.size_buckets[1],
            num_pkts_256_to_512_bytes: self.size_buckets[2],
            num_pkts_512_to_1024_bytes: self.size_buckets[3],
            num_pkts_1024_to_1514_bytes: self.size_buckets[4],
            tcp_win_max_in: self.client.max_window,
            tcp_win_max_out: self.server.max_window,
            icmp_type,
            icmp_ipv4_type,
            dns_query_id,
            dns_query_type,
            dns_ttl_answer: self.dns_a_ttl.unwrap_or(0),
            ftp_command_ret_code: self.ftp_code.unwrap_or(0),
        })
    }
}
