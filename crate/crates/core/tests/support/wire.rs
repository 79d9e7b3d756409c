//! Byte-level encoders for test captures, written against the wire formats
//! directly rather than through the crate.

pub const ETH_HEADER: usize = 14;
pub const VLAN_TAG: usize = 4;
pub const IP_HEADER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Dns {
    Query { id: u16, name: &'static str, qtype: u16 },
    /// Answers as (type, ttl); names are pointers to the question.
    Response { id: u16, name: &'static str, qtype: u16, answers: Vec<(u16, u32)> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Zeros(usize),
    Bytes(Vec<u8>),
    Dns(Dns),
    /// An FTP server reply and the code it carries, if any.
    Ftp { text: String, code: Option<u16> },
}

impl Body {
    pub fn bytes(&self) -> Vec<u8> {
        match self {
            Body::Zeros(n) => vec![0; *n],
            Body::Bytes(b) => b.clone(),
            Body::Dns(d) => encode_dns(d),
            Body::Ftp { text, .. } => text.as_bytes().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.bytes().len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum L4 {
    Tcp { sport: u16, dport: u16, flags: u8, seq: u32, window: u16, body: Body },
    Udp { sport: u16, dport: u16, body: Body },
    Icmp { icmp_type: u8, code: u8, body: Body },
}

impl L4 {
    pub fn protocol(&self) -> u8 {
        match self {
            L4::Tcp { .. } => 6,
            L4::Udp { .. } => 17,
            L4::Icmp { .. } => 1,
        }
    }

    pub fn header_len(&self) -> usize {
        match self {
            L4::Tcp { .. } => 20,
            L4::Udp { .. } | L4::Icmp { .. } => 8,
        }
    }

    pub fn body(&self) -> &Body {
        match self {
            L4::Tcp { body, .. } | L4::Udp { body, .. } | L4::Icmp { body, .. } => body,
        }
    }

    pub fn ports(&self) -> (u16, u16) {
        match self {
            L4::Tcp { sport, dport, .. } | L4::Udp { sport, dport, .. } => (*sport, *dport),
            L4::Icmp { .. } => (0, 0),
        }
    }
}

/// One IPv4 packet inside an Ethernet frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Ip {
    pub ts: u64,
    pub src: [u8; 4],
    pub dst: [u8; 4],
    pub ttl: u8,
    pub l4: L4,
    pub vlan: Option<u16>,
    pub frag_offset: u16,
    pub snap: Option<usize>,
    pub trailer: usize,
}

impl Ip {
    pub fn new(ts: u64, src: [u8; 4], dst: [u8; 4], l4: L4) -> Self {
        Ip { ts, src, dst, ttl: 64, l4, vlan: None, frag_offset: 0, snap: None, trailer: 0 }
    }

    pub fn total_length(&self) -> usize {
        IP_HEADER + self.l4.header_len() + self.l4.body().len()
    }

    pub fn link_header(&self) -> usize {
        ETH_HEADER + if self.vlan.is_some() { VLAN_TAG } else { 0 }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut f = vec![0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb];
        if let Some(id) = self.vlan {
            f.extend_from_slice(&[0x81, 0x00]);
            f.extend_from_slice(&id.to_be_bytes());
        }
        f.extend_from_slice(&[0x08, 0x00]);
        let total = self.total_length() as u16;
        f.push(0x45);
        f.push(0);
        f.extend_from_slice(&total.to_be_bytes());
        f.extend_from_slice(&[0x12, 0x34]);
        f.extend_from_slice(&self.frag_offset.to_be_bytes());
        f.push(self.ttl);
        f.push(self.l4.protocol());
        f.extend_from_slice(&[0, 0]);
        f.extend_from_slice(&self.src);
        f.extend_from_slice(&self.dst);
        let body = self.l4.body().bytes();
        match &self.l4 {
            L4::Tcp { sport, dport, flags, seq, window, .. } => {
                f.extend_from_slice(&sport.to_be_bytes());
                f.extend_from_slice(&dport.to_be_bytes());
                f.extend_from_slice(&seq.to_be_bytes());
                f.extend_from_slice(&[0, 0, 0, 0]);
                f.push(5 << 4);
                f.push(*flags);
                f.extend_from_slice(&window.to_be_bytes());
                f.extend_from_slice(&[0, 0, 0, 0]);
            }
            L4::Udp { sport, dport, .. } => {
                f.extend_from_slice(&sport.to_be_bytes());
                f.extend_from_slice(&dport.to_be_bytes());
                f.extend_from_slice(&((8 + body.len()) as u16).to_be_bytes());
                f.extend_from_slice(&[0, 0]);
            }
            L4::Icmp { icmp_type, code, .. } => {
                f.extend_from_slice(&[*icmp_type, *code, 0, 0, 0, 1, 0, 1]);
            }
        }
        f.extend_from_slice(&body);
        f.extend(std::iter::repeat(0).take(self.trailer));
        if let Some(snap) = self.snap {
            f.truncate(snap);
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Ip(Ip),
    Arp { ts: u64 },
    Ipv6 { ts: u64 },
}

impl Frame {
    pub fn ts(&self) -> u64 {
        match self {
            Frame::Ip(p) => p.ts,
            Frame::Arp { ts } | Frame::Ipv6 { ts } => *ts,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            Frame::Ip(p) => p.encode(),
            Frame::Arp { .. } => {
                let mut f = vec![0xff; 6];
                f.extend_from_slice(&[0x02, 0, 0, 0, 0, 1, 0x08, 0x06]);
                f.extend_from_slice(&[0, 1, 8, 0, 6, 4, 0, 1]);
                f.extend_from_slice(&[0; 20]);
                f
            }
            Frame::Ipv6 { .. } => {
                let mut f = vec![0x33, 0x33, 0, 0, 0, 1, 0x02, 0, 0, 0, 0, 1, 0x86, 0xdd];
                f.extend_from_slice(&[0x60, 0, 0, 0, 0, 8, 17, 64]);
                f.extend_from_slice(&[0; 32]);
                f.extend_from_slice(&[0x13, 0x88, 0x00, 0x35, 0, 8, 0, 0]);
                f
            }
        }
    }
}

fn encode_name(name: &str, out: &mut Vec<u8>) {
    for label in name.split('.').filter(|l| !l.is_empty()) {
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
}

pub fn encode_dns(msg: &Dns) -> Vec<u8> {
    let mut m = Vec::new();
    let (id, flags, name, qtype, answers): (u16, u16, &str, u16, &[(u16, u32)]) = match msg {
        Dns::Query { id, name, qtype } => (*id, 0x0100, name, *qtype, &[]),
        Dns::Response { id, name, qtype, answers } => (*id, 0x8180, name, *qtype, answers),
    };
    m.extend_from_slice(&id.to_be_bytes());
    m.extend_from_slice(&flags.to_be_bytes());
    m.extend_from_slice(&1u16.to_be_bytes());
    m.extend_from_slice(&(answers.len() as u16).to_be_bytes());
    m.extend_from_slice(&[0, 0, 0, 0]);
    encode_name(name, &mut m);
    m.extend_from_slice(&qtype.to_be_bytes());
    m.extend_from_slice(&1u16.to_be_bytes());
    for &(rtype, ttl) in answers {
        m.extend_from_slice(&[0xc0, 0x0c]);
        m.extend_from_slice(&rtype.to_be_bytes());
        m.extend_from_slice(&1u16.to_be_bytes());
        m.extend_from_slice(&ttl.to_be_bytes());
        let rdata: Vec<u8> = match rtype {
            1 => vec![93, 184, 216, 34],
            28 => vec![0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
            _ => vec![0xc0, 0x0c],
        };
        m.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
        m.extend_from_slice(&rdata);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Micro,
    Nano,
}

/// Serializes frames as a classic pcap file with Ethernet link type.
pub fn pcap_bytes(frames: &[Frame], resolution: Resolution, big_endian: bool) -> Vec<u8> {
    let u32b = |v: u32| if big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
    let u16b = |v: u16| if big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
    let magic = match resolution {
        Resolution::Micro => 0xa1b2_c3d4u32,
        Resolution::Nano => 0xa1b2_3c4d,
    };
    let mut out = Vec::new();
    out.extend_from_slice(&u32b(magic));
    out.extend_from_slice(&u16b(2));
    out.extend_from_slice(&u16b(4));
    out.extend_from_slice(&[0; 8]);
    out.extend_from_slice(&u32b(65535));
    out.extend_from_slice(&u32b(1));
    for frame in frames {
        let data = frame.encode();
        let orig = match frame {
            Frame::Ip(p) => p.link_header() + p.total_length() + p.trailer,
            _ => data.len(),
        };
        let ts = frame.ts();
        let frac = match resolution {
            Resolution::Micro => (ts % 1_000_000) as u32,
            // sub-microsecond digits that readers must drop
            Resolution::Nano => (ts % 1_000_000) as u32 * 1000 + 789,
        };
        out.extend_from_slice(&u32b((ts / 1_000_000) as u32));
        out.extend_from_slice(&u32b(frac));
        out.extend_from_slice(&u32b(data.len() as u32));
        out.extend_from_slice(&u32b(orig as u32));
        out.extend_from_slice(&data);
    }
    out
}
