use std::net::Ipv4Addr;

/// Feature column names, in record order.
pub const FEATURE_COLUMNS: [&str; 43] = [
    "IPV4_SRC_ADDR",
    "IPV4_DST_ADDR",
    "L4_SRC_PORT",
    "L4_DST_PORT",
    "PROTOCOL",
    "L7_PROTO",
    "IN_BYTES",
    "OUT_BYTES",
    "IN_PKTS",
    "OUT_PKTS",
    "FLOW_DURATION_MILLISECONDS",
    "TCP_FLAGS",
    "CLIENT_TCP_FLAGS",
    "SERVER_TCP_FLAGS",
    "DURATION_IN",
    "DURATION_OUT",
    "MIN_TTL",
    "MAX_TTL",
    "LONGEST_FLOW_PKT",
    "SHORTEST_FLOW_PKT",
    "MIN_IP_PKT_LEN",
    "MAX_IP_PKT_LEN",
    "SRC_TO_DST_SECOND_BYTES",
    "DST_TO_SRC_SECOND_BYTES",
    "RETRANSMITTED_IN_BYTES",
    "RETRANSMITTED_IN_PKTS",
    "RETRANSMITTED_OUT_BYTES",
    "RETRANSMITTED_OUT_PKTS",
    "SRC_TO_DST_AVG_THROUGHPUT",
    "DST_TO_SRC_AVG_THROUGHPUT",
    "NUM_PKTS_UP_TO_128_BYTES",
    "NUM_PKTS_128_TO_256_BYTES",
    "NUM_PKTS_256_TO_512_BYTES",
    "NUM_PKTS_512_TO_1024_BYTES",
    "NUM_PKTS_1024_TO_1514_BYTES",
    "TCP_WIN_MAX_IN",
    "TCP_WIN_MAX_OUT",
    "ICMP_TYPE",
    "ICMP_IPV4_TYPE",
    "DNS_QUERY_ID",
    "DNS_QUERY_TYPE",
    "DNS_TTL_ANSWER",
    "FTP_COMMAND_RET_CODE",
];

/// A finalized flow. "In"/"src to dst" fields describe the client to
/// server direction, "out"/"dst to src" the reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub ipv4_src_addr: Ipv4Addr,
    pub ipv4_dst_addr: Ipv4Addr,
    pub l4_src_port: u16,
    pub l4_dst_port: u16,
    pub protocol: u8,
    pub l7_proto: u16,
    pub in_bytes: u64,
    pub out_bytes: u64,
    pub in_pkts: u64,
    pub out_pkts: u64,
    pub flow_duration_milliseconds: u64,
    pub tcp_flags: u8,
    pub client_tcp_flags: u8,
    pub server_tcp_flags: u8,
    pub duration_in: u64,
    pub duration_out: u64,
    pub min_ttl: u8,
    pub max_ttl: u8,
    pub longest_flow_pkt: u16,
    pub shortest_flow_pkt: u16,
    pub min_ip_pkt_len: u16,
    pub max_ip_pkt_len: u16,
    pub src_to_dst_second_bytes: f64,
    pub dst_to_src_second_bytes: f64,
    pub retransmitted_in_bytes: u64,
    pub retransmitted_in_pkts: u64,
    pub retransmitted_out_bytes: u64,
    pub retransmitted_out_pkts: u64,
    pub src_to_dst_avg_throughput: f64,
    pub dst_to_src_avg_throughput: f64,
    pub num_pkts_up_to_128_bytes: u64,
    pub num_pkts_128_to_256_bytes: u64,
    pub num_pkts_256_to_512_bytes: u64,
    pub num_pkts_512_to_1024_bytes: u64,
    pub num_pkts_1024_to_1514_bytes: u64,
    pub tcp_win_max_in: u16,
    pub tcp_win_max_out: u16,
    pub icmp_type: u16,
    pub icmp_ipv4_type: u8,
    pub dns_query_id: u16,
    pub dns_query_type: u16,
    pub dns_ttl_answer: u32,
    pub ftp_command_ret_code: u16,
}

/// Renders a rate with at most six fractional digits, trailing zeros and
/// a bare trailing `.` removed.
pub fn format_rate(value: f64) -> String {
    let mut s = format!("{value:.6}");
    let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
    s.truncate(trimmed);
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn parse_field<T: std::str::FromStr>(column: usize, text: &str) -> Result<T, String> {
    // FromStr for integers accepts a leading '+', which the writer never emits.
    if text.starts_with('+') || text.is_empty() {
        return Err(format!("{}: invalid value {text:?}", FEATURE_COLUMNS[column]));
    }
    text.parse()
        .map_err(|_| format!("{}: invalid value {text:?}", FEATURE_COLUMNS[column]))
}

fn parse_rate(column: usize, text: &str) -> Result<f64, String> {
    let v: f64 = parse_field(column, text)?;
    if !v.is_finite() || v < 0.0 || !text.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return Err(format!("{}: invalid rate {text:?}", FEATURE_COLUMNS[column]));
    }
    Ok(v)
}

impl FlowRecord {
    /// Column values rendered for CSV output.
    pub fn to_fields(&self) -> Vec<String> {
        vec![
            self.ipv4_src_addr.to_string(),
            self.ipv4_dst_addr.to_string(),
            self.l4_src_port.to_string(),
            self.l4_dst_port.to_string(),
            self.protocol.to_string(),
            self.l7_proto.to_string(),
            self.in_bytes.to_string(),
            self.out_bytes.to_string(),
            self.in_pkts.to_string(),
            self.out_pkts.to_string(),
            self.flow_duration_milliseconds.to_string(),
            self.tcp_flags.to_string(),
            self.client_tcp_flags.to_string(),
            self.server_tcp_flags.to_string(),
            self.duration_in.to_string(),
            self.duration_out.to_string(),
            self.min_ttl.to_string(),
            self.max_ttl.to_string(),
            self.longest_flow_pkt.to_string(),
            self.shortest_flow_pkt.to_string(),
            self.min_ip_pkt_len.to_string(),
            self.max_ip_pkt_len.to_string(),
            format_rate(self.src_to_dst_second_bytes),
            format_rate(self.dst_to_src_second_bytes),
            self.retransmitted_in_bytes.to_string(),
            self.retransmitted_in_pkts.to_string(),
            self.retransmitted_out_bytes.to_string(),
            self.retransmitted_out_pkts.to_string(),
            format_rate(self.src_to_dst_avg_throughput),
            format_rate(self.dst_to_src_avg_throughput),
            self.num_pkts_up_to_128_bytes.to_string(),
            self.num_pkts_128_to_256_bytes.to_string(),
            self.num_pkts_256_to_512_bytes.to_string(),
            self.num_pkts_512_to_1024_bytes.to_string(),
            self.num_pkts_1024_to_1514_bytes.to_string(),
            self.tcp_win_max_in.to_string(),
            self.tcp_win_max_out.to_string(),
            self.icmp_type.to_string(),
            self.icmp_ipv4_type.to_string(),
            self.dns_query_id.to_string(),
            self.dns_query_type.to_string(),
            self.dns_ttl_answer.to_string(),
            self.ftp_command_ret_code.to_string(),
        ]
    }

    /// Parses the 43 feature columns. The error names the offending column.
    pub fn from_fields<S: AsRef<str>>(fields: &[S]) -> Result<Self, String> {
        if fields.len() != FEATURE_COLUMNS.len() {
            return Err(format!(
                "expected {} feature columns, found {}",
                FEATURE_COLUMNS.len(),
                fields.len()
            ));
        }
        let f = |i: usize| fields[i].as_ref();
        Ok(FlowRecord {
            ipv4_src_addr: parse_field(0, f(0))?,
            ipv4_dst_addr: parse_field(1, f(1))?,
            l4_src_port: parse_field(2, f(2))?,
            l4_dst_port: parse_field(3, f(3))?,
            protocol: parse_field(4, f(4))?,
            l7_proto: parse_field(5, f(5))?,
            in_bytes: parse_field(6, f(6))?,
            out_bytes: parse_field(7, f(7))?,
            in_pkts: parse_field(8, f(8))?,
            out_pkts: parse_field(9, f(9))?,
            flow_duration_milliseconds: parse_field(10, f(10))?,
            tcp_flags: parse_field(11, f(11))?,
            client_tcp_flags: parse_field(12, f(12))?,
            server_tcp_flags: parse_field(13, f(13))?,
            duration_in: parse_field(14, f(14))?,
            duration_out: parse_field(15, f(15))?,
            min_ttl: parse_field(16, f(16))?,
            max_ttl: parse_field(17, f(17))?,
            longest_flow_pkt: parse_field(18, f(18))?,
            shortest_flow_pkt: parse_field(19, f(19))?,
            min_ip_pkt_len: parse_field(20, f(20))?,
            max_ip_pkt_len: parse_field(21, f(21))?,
            src_to_dst_second_bytes: parse_rate(22, f(22))?,
            dst_to_src_second_bytes: parse_rate(23, f(23))?,
            retransmitted_in_bytes: parse_field(24, f(24))?,
            retransmitted_in_pkts: parse_field(25, f(25))?,
            retransmitted_out_bytes: parse_field(26, f(26))?,
            retransmitted_out_pkts: parse_field(27, f(27))?,
            src_to_dst_avg_throughput: parse_rate(28, f(28))?,
            dst_to_src_avg_throughput: parse_rate(29, f(29))?,
            num_pkts_up_to_128_bytes: parse_field(30, f(30))?,
            num_pkts_128_to_256_bytes: parse_field(31, f(31))?,
            num_pkts_256_to_512_bytes: parse_field(32, f(32))?,
            num_pkts_512_to_1024_bytes: parse_field(33, f(33))?,
            num_pkts_1024_to_1514_bytes: parse_field(34, f(34))?,
            tcp_win_max_in: parse_field(35, f(35))?,
            tcp_win_max_out: parse_field(36, f(36))?,
            icmp_type: parse_field(37, f(37))?,
            icmp_ipv4_type: parse_field(38, f(38))?,
            dns_query_id: parse_field(39, f(39))?,
            dns_query_type: parse_field(40, f(40))?,
            dns_ttl_answer: parse_field(41, f(41))?,
            ftp_command_ret_code: parse_field(42, f(42))?,
        })
    }

    /// Rates must be finite and non-negative to be written.
    pub fn rates_valid(&self) -> bool {
        [
            self.src_to_dst_second_bytes,
            self.dst_to_src_second_bytes,
            self.src_to_dst_avg_throughput,
            self.dst_to_src_avg_throughput,
        ]
        .iter()
        .all(|r| r.is_finite() && *r >= 0.0)
    }
}
