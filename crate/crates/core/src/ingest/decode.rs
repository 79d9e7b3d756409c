use std::net::Ipv4Addr;

use super::{IcmpInfo, PacketRecord, TcpInfo, LINKTYPE_ETHERNET, PROTO_ICMP, PROTO_TCP, PROTO_UDP};

const ETHERNET_HEADER_LEN: usize = 14;
const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_IPV6: u16 = 0x86dd;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88a8;

const TCP_MIN_HEADER: usize = 20;
const UDP_HEADER: usize = 8;
const ICMP_HEADER: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Packet(PacketRecord),
    Skip(SkipReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    NotIpv4 { ethertype: u16 },
    Ipv6,
    /// More than one VLAN tag (QinQ).
    StackedVlan,
    Malformed(MalformedHeader),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalformedHeader {
    ShortFrame,
    UnsupportedLinkType(u32),
    IpVersion(u8),
    /// IHL below 5 words or longer than the captured bytes.
    IpHeaderLength,
    /// Total length smaller than the IP header itself.
    IpTotalLength,
    /// TCP data offset below 5 words or beyond the IP payload.
    TcpDataOffset,
}

/// Decodes one captured frame.
///
/// Never panics; every outcome is either a packet or a counted skip.
pub fn decode_packet(raw: &[u8], timestamp_us: u64, link_type: u32) -> Decoded {
    use Decoded::Skip;
    if link_type != LINKTYPE_ETHERNET {
        return Skip(SkipReason::Malformed(MalformedHeader::UnsupportedLinkType(link_type)));
    }
    if raw.len() < ETHERNET_HEADER_LEN {
        return Skip(SkipReason::Malformed(MalformedHeader::ShortFrame));
    }
    let mut ethertype = be16(raw, 12);
    let mut offset = ETHERNET_HEADER_LEN;
    if ethertype == ETHERTYPE_QINQ {
        return Skip(SkipReason::StackedVlan);
    }
    if ethertype == ETHERTYPE_VLAN {
        if raw.len() < offset + 4 {
            return Skip(SkipReason::Malformed(MalformedHeader::ShortFrame));
        }
        ethertype = be16(raw, offset + 2);
        offset += 4;
        if ethertype == ETHERTYPE_VLAN || ethertype == ETHERTYPE_QINQ {
            return Skip(SkipReason::StackedVlan);
        }
    }
    match ethertype {
        ETHERTYPE_IPV4 => match decode_ipv4(&raw[offset..], timestamp_us) {
            Ok(pkt) => Decoded::Packet(pkt),
            Err(m) => Skip(SkipReason::Malformed(m)),
        },
        ETHERTYPE_IPV6 => Skip(SkipReason::Ipv6),
        other => Skip(SkipReason::NotIpv4 { ethertype: other }),
    }
}

fn decode_ipv4(ip: &[u8], timestamp_us: u64) -> Result<PacketRecord, MalformedHeader> {
    if ip.len() < 20 {
        return Err(MalformedHeader::ShortFrame);
    }
    let version = ip[0] >> 4;
    if version != 4 {
        return Err(MalformedHeader::IpVersion(version));
    }
    let header_len = ((ip[0] & 0x0f) as usize) * 4;
    if header_len < 20 || header_len > ip.len() {
        return Err(MalformedHeader::IpHeaderLength);
    }
    let total_length = be16(ip, 2);
    if (total_length as usize) < header_len {
        return Err(MalformedHeader::IpTotalLength);
    }
    let fragment_offset = be16(ip, 6) & 0x1fff;
    let ttl = ip[8];
    let protocol = ip[9];
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);

    let mut pkt = PacketRecord {
        timestamp_us,
        src_ip,
        dst_ip,
        src_port: 0,
        dst_port: 0,
        l4_protocol: protocol,
        ip_total_length: total_length,
        ttl,
        tcp: None,
        icmp: None,
        payload: Vec::new(),
    };
    if fragment_offset != 0 {
        return Ok(pkt);
    }

    // Transport bytes as declared by the IP header, and the part of them
    // that was actually captured (Ethernet padding excluded).
    let l4_len = total_length as usize - header_len;
    let captured_end = ip.len().min(total_length as usize);
    let l4 = &ip[header_len..captured_end.max(header_len)];

    match protocol {
        PROTO_TCP => {
            if l4.len() > 12 {
                let data_offset = ((l4[12] >> 4) as usize) * 4;
                if data_offset < TCP_MIN_HEADER || data_offset > l4_len {
                    return Err(MalformedHeader::TcpDataOffset);
                }
            }
            if l4.len() >= TCP_MIN_HEADER {
                let data_offset = ((l4[12] >> 4) as usize) * 4;
                pkt.src_port = be16(l4, 0);
                pkt.dst_port = be16(l4, 2);
                pkt.tcp = Some(TcpInfo {
                    flags: l4[13],
                    seq: be32(l4, 4),
                    payload_len: (l4_len - data_offset) as u32,
                    window: be16(l4, 14),
                });
                if l4.len() > data_offset {
                    pkt.payload = l4[data_offset..].to_vec();
                }
            }
        }
        PROTO_UDP => {
            if l4.len() >= UDP_HEADER && l4_len >= UDP_HEADER {
                pkt.src_port = be16(l4, 0);
                pkt.dst_port = be16(l4, 2);
                let udp_len = be16(l4, 4) as usize;
                let end = if (UDP_HEADER..=l4_len).contains(&udp_len) {
                    udp_len.min(l4.len())
                } else {
                    l4.len()
                };
                pkt.payload = l4[UDP_HEADER..end].to_vec();
            }
        }
        PROTO_ICMP => {
            if l4.len() >= ICMP_HEADER && l4_len >= ICMP_HEADER {
                pkt.icmp = Some(IcmpInfo {
                    icmp_type: l4[0],
                    code: l4[1],
                });
                pkt.payload = l4[ICMP_HEADER..].to_vec();
            }
        }
        _ => {}
    }
    Ok(pkt)
}

#[inline]
fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

#[inline]
fn be32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}
