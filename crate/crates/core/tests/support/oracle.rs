//! Straight-line reference computation of flow records from a frame list.
//!
//! No flow table and no crate decoding: packets are grouped into flows by a
//! linear scan and every feature is a direct fold over the group.

use std::net::Ipv4Addr;

use nidsflow::FlowRecord;

use super::wire::{Body, Dns, Frame, Ip, L4};

/// Port table the oracle assumes the extractor was configured with.
pub fn l7_id(protocol: u8, port: u16) -> u16 {
    match (protocol, port) {
        (6, 21) => 1,
        (6, 110) => 2,
        (6, 25) => 3,
        (6, 143) => 4,
        (6 | 17, 53) => 5,
        (6, 80) => 7,
        (17, 123) => 9,
        (17, 161) => 14,
        (17, 67 | 68) => 18,
        (6, 3306) => 20,
        (6, 23) => 70,
        (6, 443) => 91,
        (6, 22) => 92,
        _ => 0,
    }
}

#[derive(Debug, Clone)]
pub struct View<'a> {
    pub ts: u64,
    pub src: [u8; 4],
    pub dst: [u8; 4],
    pub sport: u16,
    pub dport: u16,
    pub protocol: u8,
    pub ip_len: u64,
    pub ttl: u8,
    /// flags, seq, payload length, window
    pub tcp: Option<(u8, u32, u32, u16)>,
    pub icmp: Option<(u8, u8)>,
    pub body: Option<&'a Body>,
}

/// What a conforming decoder extracts from a frame, or None when the frame
/// is not a usable IPv4 packet.
pub fn view(frame: &Frame) -> Option<View<'_>> {
    let Frame::Ip(p) = frame else { return None };
    let full = p.link_header() + p.total_length();
    let captured = p.snap.map_or(full, |s| s.min(full));
    let ip_captured = captured.checked_sub(p.link_header())?;
    if ip_captured < 20 {
        return None;
    }
    let l4_captured = ip_captured - 20;
    let body_len = p.l4.body().len();
    let mut v = View {
        ts: p.ts,
        src: p.src,
        dst: p.dst,
        sport: 0,
        dport: 0,
        protocol: p.l4.protocol(),
        ip_len: p.total_length() as u64,
        ttl: p.ttl,
        tcp: None,
        icmp: None,
        body: None,
    };
    if p.frag_offset > 0 || l4_captured < p.l4.header_len() {
        return Some(v);
    }
    (v.sport, v.dport) = p.l4.ports();
    match &p.l4 {
        L4::Tcp { flags, seq, window, .. } => v.tcp = Some((*flags, *seq, body_len as u32, *window)),
        L4::Icmp { icmp_type, code, .. } => v.icmp = Some((*icmp_type, *code)),
        L4::Udp { .. } => {}
    }
    if l4_captured >= p.l4.header_len() + body_len {
        v.body = Some(p.l4.body());
    } else {
        assert!(
            !matches!(p.l4.body(), Body::Dns(_) | Body::Ftp { .. }),
            "scenario cuts a protocol payload"
        );
    }
    Some(v)
}

fn same_conversation(a: &View, b: &View) -> bool {
    a.protocol == b.protocol
        && ((a.src, a.sport, a.dst, a.dport) == (b.src, b.sport, b.dst, b.dport)
            || (a.src, a.sport, a.dst, a.dport) == (b.dst, b.dport, b.src, b.sport))
}

/// Splits packets into flows: a packet joins the most recent flow of its
/// conversation unless it lies more than `idle` after that flow's latest
/// packet or more than `active` after its earliest.
pub fn group<'a>(views: &[View<'a>], idle: u64, active: u64) -> Vec<Vec<View<'a>>> {
    let mut flows: Vec<Vec<View<'a>>> = Vec::new();
    for v in views {
        let open = flows.iter_mut().rev().find(|f| same_conversation(&f[0], v));
        match open {
            Some(f) => {
                let first = f.iter().map(|p| p.ts).min().unwrap();
                let last = f.iter().map(|p| p.ts).max().unwrap();
                if v.ts > last + idle || v.ts > first + active {
                    flows.push(vec![v.clone()]);
                } else {
                    f.push(v.clone());
                }
            }
            None => flows.push(vec![v.clone()]),
        }
    }
    flows
}

/// Unwraps 32-bit sequence numbers by taking the 64-bit value nearest the
/// previous one, then counts segments whose end does not pass the highest
/// end seen so far.
fn retransmissions(pkts: &[&View]) -> (u64, u64) {
    // Segment ends are unwrapped to the representative nearest the highest
    // end seen so far, then compared as plain integers.
    let mut high: Option<i64> = None;
    let (mut bytes, mut count) = (0, 0);
    for p in pkts {
        let Some((_, seq, len, _)) = p.tcp else { continue };
        if len == 0 {
            continue;
        }
        let raw_end = (seq as i64 + len as i64).rem_euclid(1 << 32);
        let end = match high {
            None => raw_end,
            Some(h) => {
                let base = h - h.rem_euclid(1 << 32) + raw_end;
                *[base - (1 << 32), base, base + (1 << 32)]
                    .iter()
                    .min_by_key(|c| ((*c - h).abs(), -**c))
                    .unwrap()
            }
        };
        if high.is_some_and(|h| end <= h) {
            bytes += p.ip_len;
            count += 1;
        }
        high = Some(high.map_or(end, |h| h.max(end)));
    }
    (bytes, count)
}

fn span_ms(pkts: &[&View]) -> u64 {
    if pkts.len() < 2 {
        return 0;
    }
    let first = pkts.iter().map(|p| p.ts).min().unwrap();
    let last = pkts.iter().map(|p| p.ts).max().unwrap();
    (last - first) / 1000
}

pub fn record(flow: &[View]) -> FlowRecord {
    let head = &flow[0];
    let fwd: Vec<&View> = flow
        .iter()
        .filter(|p| (p.src, p.sport) == (head.src, head.sport) && (p.dst, p.dport) == (head.dst, head.dport))
        .collect();
    let rev: Vec<&View> = flow
        .iter()
        .filter(|p| !((p.src, p.sport) == (head.src, head.sport) && (p.dst, p.dport) == (head.dst, head.dport)))
        .collect();
    let all: Vec<&View> = flow.iter().collect();

    let bytes = |ps: &[&View]| ps.iter().map(|p| p.ip_len).sum::<u64>();
    let flags = |ps: &[&View]| ps.iter().filter_map(|p| p.tcp).fold(0u8, |a, t| a | t.0);
    let window = |ps: &[&View]| ps.iter().filter_map(|p| p.tcp).map(|t| t.3).max().unwrap_or(0);
    let in_bytes = bytes(&fwd);
    let out_bytes = bytes(&rev);
    let duration = span_ms(&all);
    let seconds = if duration == 0 { 1.0 } else { duration as f64 / 1000.0 };
    let bucket = |lo: u64, hi: u64| flow.iter().filter(|p| p.ip_len >= lo && p.ip_len <= hi).count() as u64;
    let (ret_in_b, ret_in_p) = retransmissions(&fwd);
    let (ret_out_b, ret_out_p) = retransmissions(&rev);
    let icmp = flow.iter().find_map(|p| p.icmp);

    let dns: Vec<&Dns> = flow
        .iter()
        .filter(|p| p.protocol == 17 && (p.sport == 53 || p.dport == 53))
        .filter_map(|p| match p.body {
            Some(Body::Dns(d)) => Some(d),
            _ => None,
        })
        .collect();
    let query = dns.iter().find_map(|d| match d {
        Dns::Query { id, qtype, .. } => Some((*id, *qtype)),
        _ => None,
    });
    let a_ttl = dns.iter().find_map(|d| match d {
        Dns::Response { answers, .. } => answers.iter().find(|a| a.0 == 1).map(|a| a.1),
        _ => None,
    });
    let ftp = flow
        .iter()
        .filter(|p| p.tcp.is_some() && p.sport == 21)
        .filter_map(|p| match p.body {
            Some(Body::Ftp { code, .. }) => *code,
            _ => None,
        })
        .last();

    let lens = flow.iter().map(|p| p.ip_len as u16);
    FlowRecord {
        ipv4_src_addr: Ipv4Addr::from(head.src),
        ipv4_dst_addr: Ipv4Addr::from(head.dst),
        l4_src_port: head.sport,
        l4_dst_port: head.dport,
        protocol: head.protocol,
        l7_proto: l7_id(head.protocol, head.sport.min(head.dport)),
        in_bytes,
        out_bytes,
        in_pkts: fwd.len() as u64,
        out_pkts: rev.len() as u64,
        flow_duration_milliseconds: duration,
        tcp_flags: flags(&all),
        client_tcp_flags: flags(&fwd),
        server_tcp_flags: flags(&rev),
        duration_in: span_ms(&fwd),
        duration_out: span_ms(&rev),
        min_ttl: flow.iter().map(|p| p.ttl).min().unwrap(),
        max_ttl: flow.iter().map(|p| p.ttl).max().unwrap(),
        longest_flow_pkt: lens.clone().max().unwrap(),
        shortest_flow_pkt: lens.clone().min().unwrap(),
        min_ip_pkt_len: lens.clone().min().unwrap(),
        max_ip_pkt_len: lens.max().unwrap(),
        src_to_dst_second_bytes: in_bytes as f64 / seconds,
        dst_to_src_second_bytes: out_bytes as f64 / seconds,
        retransmitted_in_bytes: ret_in_b,
        retransmitted_in_pkts: ret_in_p,
        retransmitted_out_bytes: ret_out_b,
        retransmitted_out_pkts: ret_out_p,
        src_to_dst_avg_throughput: 8.0 * in_bytes as f64 / seconds,
        dst_to_src_avg_throughput: 8.0 * out_bytes as f64 / seconds,
        num_pkts_up_to_128_bytes: bucket(0, 128),
        num_pkts_128_to_256_bytes: bucket(129, 256),
        num_pkts_256_to_512_bytes: bucket(257, 512),
        num_pkts_512_to_1024_bytes: bucket(513, 1024),
        num_pkts_1024_to_1514_bytes: bucket(1025, 1514),
        tcp_win_max_in: window(&fwd),
        tcp_win_max_out: window(&rev),
        icmp_type: icmp.map_or(0, |(t, c)| t as u16 * 256 + c as u16),
        icmp_ipv4_type: icmp.map_or(0, |(t, _)| t),
        dns_query_id: query.map_or(0, |q| q.0),
        dns_query_type: query.map_or(0, |q| q.1),
        dns_ttl_answer: a_ttl.unwrap_or(0),
        ftp_command_ret_code: ftp.unwrap_or(0),
    }
}

/// Reference records for a capture, ordered by first packet time, then by
/// client address, server address, client port, server port, protocol.
pub fn reference(frames: &[Frame], idle: u64, active: u64) -> Vec<FlowRecord> {
    let views: Vec<View> = frames.iter().filter_map(view).collect();
    let mut flows: Vec<(u64, FlowRecord)> = group(&views, idle, active)
        .iter()
        .map(|f| (f.iter().map(|p| p.ts).min().unwrap(), record(f)))
        .collect();
    flows.sort_by(|(ta, a), (tb, b)| {
        (ta, a.ipv4_src_addr, a.ipv4_dst_addr, a.l4_src_port, a.l4_dst_port, a.protocol).cmp(&(
            tb,
            b.ipv4_src_addr,
            b.ipv4_dst_addr,
            b.l4_src_port,
            b.l4_dst_port,
            b.protocol,
        ))
    });
    flows.into_iter().map(|(_, r)| r).collect()
}

pub const RATE_COLUMNS: [usize; 4] = [22, 23, 28, 29];

fn rates(r: &FlowRecord) -> [f64; 4] {
    [
        r.src_to_dst_second_bytes,
        r.dst_to_src_second_bytes,
        r.src_to_dst_avg_throughput,
        r.dst_to_src_avg_throughput,
    ]
}

/// Column-by-column comparison: integers exactly, rates within 1e-9
/// relative. Returns a description of each mismatch.
pub fn diff(actual: &FlowRecord, expected: &FlowRecord) -> Vec<String> {
    let mut out = Vec::new();
    let (a, e) = (actual.to_fields(), expected.to_fields());
    for (i, name) in nidsflow::features::FEATURE_COLUMNS.iter().enumerate() {
        if RATE_COLUMNS.contains(&i) {
            continue;
        }
        if a[i] != e[i] {
            out.push(format!("{name}: got {} want {}", a[i], e[i]));
        }
    }
    for (k, (x, y)) in rates(actual).iter().zip(rates(expected)).enumerate() {
        let tol = 1e-9 * y.abs().max(1e-300);
        if (x - y).abs() > tol {
            out.push(format!(
                "{}: got {x} want {y}",
                nidsflow::features::FEATURE_COLUMNS[RATE_COLUMNS[k]]
            ));
        }
    }
    out
}

#[allow(unused)]
pub fn ip_frames(frames: &[Ip]) -> Vec<Frame> {
    frames.iter().cloned().map(Frame::Ip).collect()
}
