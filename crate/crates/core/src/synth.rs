//! Builders for crafting captures: Ethernet/IPv4 frames, classic pcap files
//! and DNS messages. Used by the test suites and the runnable examples, and
//! handy for generating fixtures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use crate::ingest::{TimestampResolution, PROTO_ICMP, PROTO_TCP, PROTO_UDP};

pub mod tcp_flags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
    pub const ECE: u8 = 0x40;
    pub const CWR: u8 = 0x80;
}

#[derive(Debug, Clone)]
enum Transport {
    Tcp {
        sport: u16,
        dport: u16,
        flags: u8,
        seq: u32,
        window: u16,
    },
    Udp {
        sport: u16,
        dport: u16,
    },
    Icmp {
        icmp_type: u8,
        code: u8,
    },
    Raw,
}

/// Builds a single Ethernet frame carrying an IPv4 packet.
#[derive(Debug, Clone)]
pub struct FrameBuilder {
    src: Ipv4Addr,
    dst: Ipv4Addr,
    protocol: u8,
    ttl: u8,
    transport: Transport,
    payload: Vec<u8>,
    vlan: Option<u16>,
    fragment_offset: u16,
    snaplen: Option<usize>,
    trailer: usize,
}

impl FrameBuilder {
    fn base(src: Ipv4Addr, dst: Ipv4Addr, protocol: u8, transport: Transport) -> Self {
        FrameBuilder {
            src,
            dst,
            protocol,
            ttl: 64,
            transport,
            payload: Vec::new(),
            vlan: None,
            fragment_offset: 0,
            snaplen: None,
            trailer: 0,
        }
    }

    pub fn tcp(src: impl Into<Ipv4Addr>, dst: impl Into<Ipv4Addr>, sport: u16, dport: u16) -> Self {
        Self::base(
            src.into(),
            dst.into(),
            PROTO_TCP,
            Transport::Tcp {
                sport,
                dport,
                flags: tcp_flags::ACK,
                seq: 0,
                window: 65535,
            },
        )
    }

    pub fn udp(src: impl Into<Ipv4Addr>, dst: impl Into<Ipv4Addr>, sport: u16, dport: u16) -> Self {
        Self::base(src.into(), dst.into(), PROTO_UDP, Transport::Udp { sport, dport })
    }

    pub fn icmp(src: impl Into<Ipv4Addr>, dst: impl Into<Ipv4Addr>, icmp_type: u8, code: u8) -> Self {
        Self::base(src.into(), dst.into(), PROTO_ICMP, Transport::Icmp { icmp_type, code })
    }

    /// An IPv4 packet of an arbitrary protocol; the payload follows the IP header directly.
    pub fn ip(src: impl Into<Ipv4Addr>, dst: impl Into<Ipv4Addr>, protocol: u8) -> Self {
        Self::base(src.into(), dst.into(), protocol, Transport::Raw)
    }

    pub fn ttl(mut self, ttl: u8) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn flags(mut self, value: u8) -> Self {
        if let Transport::Tcp { flags, .. } = &mut self.transport {
            *flags = value;
        }
        self
    }

    pub fn seq(mut self, value: u32) -> Self {
        if let Transport::Tcp { seq, .. } = &mut self.transport {
            *seq = value;
        }
        self
    }

    pub fn window(mut self, value: u16) -> Self {
        if let Transport::Tcp { window, .. } = &mut self.transport {
            *window = value;
        }
        self
    }

    pub fn payload(mut self, bytes: impl Into<Vec<u8>>) -> Self {
        self.payload = bytes.into();
        self
    }

    /// Zero-filled payload of `len` bytes.
    pub fn payload_len(mut self, len: usize) -> Self {
        self.payload = vec![0u8; len];
        self
    }

    pub fn vlan(mut self, id: u16) -> Self {
        self.vlan = Some(id);
        self
    }

    /// Fragment offset in 8-byte units.
    pub fn fragment_offset(mut self, offset: u16) -> Self {
        self.fragment_offset = offset & 0x1fff;
        self
    }

    /// Cuts the built frame to at most `len` bytes, as a capture snap length would.
    pub fn snaplen(mut self, len: usize) -> Self {
        self.snaplen = Some(len);
        self
    }

    /// Appends bytes after the IP packet (Ethernet padding/trailer).
    pub fn trailer(mut self, len: usize) -> Self {
        self.trailer = len;
        self
    }

    fn l4_header_len(&self) -> usize {
        match self.transport {
            Transport::Tcp { .. } => 20,
            Transport::Udp { .. } | Transport::Icmp { .. } => 8,
            Transport::Raw => 0,
        }
    }

    /// Value the IP total-length field will carry.
    pub fn ip_total_length(&self) -> u16 {
        (20 + self.l4_header_len() + self.payload.len()) as u16
    }

    pub fn build(&self) -> Vec<u8> {
        let total = self.ip_total_length();
        let mut out = Vec::with_capacity(18 + total as usize + self.trailer);
        out.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02, 0x02, 0, 0, 0, 0, 0x01]);
        if let Some(id) = self.vlan {
            out.extend_from_slice(&[0x81, 0x00]);
            out.extend_from_slice(&(id & 0x0fff).to_be_bytes());
        }
        out.extend_from_slice(&[0x08, 0x00]);

        out.push(0x45);
        out.push(0);
        out.extend_from_slice(&total.to_be_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.fragment_offset.to_be_bytes());
        out.push(self.ttl);
        out.push(self.protocol);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&self.src.octets());
        out.extend_from_slice(&self.dst.octets());

        match self.transport {
            Transport::Tcp {
                sport,
                dport,
                flags,
                seq,
                window,
            } => {
                out.extend_from_slice(&sport.to_be_bytes());
                out.extend_from_slice(&dport.to_be_bytes());
                out.extend_from_slice(&seq.to_be_bytes());
                out.extend_from_slice(&[0, 0, 0, 0]);
                out.push(0x50);
                out.push(flags);
                out.extend_from_slice(&window.to_be_bytes());
                out.extend_from_slice(&[0, 0, 0, 0]);
            }
            Transport::Udp { sport, dport } => {
                out.extend_from_slice(&sport.to_be_bytes());
                out.extend_from_slice(&dport.to_be_bytes());
                out.extend_from_slice(&((8 + self.payload.len()) as u16).to_be_bytes());
                out.extend_from_slice(&[0, 0]);
            }
            Transport::Icmp { icmp_type, code } => {
                out.extend_from_slice(&[icmp_type, code, 0, 0, 0, 1, 0, 1]);
            }
            Transport::Raw => {}
        }
        out.extend_from_slice(&self.payload);
        out.resize(out.len() + self.trailer, 0);
        if let Some(len) = self.snaplen {
            out.truncate(len);
        }
        out
    }
}

/// Writes classic pcap files with an Ethernet link type.
pub struct CaptureWriter<W: Write> {
    out: W,
    resolution: TimestampResolution,
    big_endian: bool,
}

impl CaptureWriter<BufWriter<File>> {
    /// Little-endian microsecond capture at `path`.
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = File::create(path)?;
        CaptureWriter::new(BufWriter::new(file), TimestampResolution::Micros, false)
    }
}

impl<W: Write> CaptureWriter<W> {
    pub fn new(mut out: W, resolution: TimestampResolution, big_endian: bool) -> io::Result<Self> {
        let magic: u32 = match resolution {
            TimestampResolution::Micros => 0xa1b2_c3d4,
            TimestampResolution::Nanos => 0xa1b2_3c4d,
        };
        let mut w = |bytes_le: &[u8], bytes_be: &[u8]| {
            out.write_all(if big_endian { bytes_be } else { bytes_le })
        };
        w(&magic.to_le_bytes(), &magic.to_be_bytes())?;
        w(&2u16.to_le_bytes(), &2u16.to_be_bytes())?;
        w(&4u16.to_le_bytes(), &4u16.to_be_bytes())?;
        w(&0i32.to_le_bytes(), &0i32.to_be_bytes())?;
        w(&0u32.to_le_bytes(), &0u32.to_be_bytes())?;
        w(&65535u32.to_le_bytes(), &65535u32.to_be_bytes())?;
        w(&1u32.to_le_bytes(), &1u32.to_be_bytes())?;
        Ok(CaptureWriter {
            out,
            resolution,
            big_endian,
        })
    }

    fn put_u32(&mut self, v: u32) -> io::Result<()> {
        if self.big_endian {
            self.out.write_all(&v.to_be_bytes())
        } else {
            self.out.write_all(&v.to_le_bytes())
        }
    }

    /// Writes a record whose original length equals the frame length.
    pub fn write_frame(&mut self, timestamp_us: u64, frame: &[u8]) -> io::Result<()> {
        let sec = (timestamp_us / 1_000_000) as u32;
        let micros = (timestamp_us % 1_000_000) as u32;
        let frac = match self.resolution {
            TimestampResolution::Micros => micros,
            TimestampResolution::Nanos => micros * 1000,
        };
        self.write_raw_record(sec, frac, frame.len() as u32, frame)
    }

    pub fn write_raw_record(&mut self, sec: u32, frac: u32, orig_len: u32, data: &[u8]) -> io::Result<()> {
        self.put_u32(sec)?;
        self.put_u32(frac)?;
        self.put_u32(data.len() as u32)?;
        self.put_u32(orig_len)?;
        self.out.write_all(data)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// DNS message encoding.
pub mod dns {
    pub const TYPE_A: u16 = 1;
    pub const TYPE_NS: u16 = 2;
    pub const TYPE_CNAME: u16 = 5;
    pub const TYPE_AAAA: u16 = 28;

    /// One answer record; its owner name is a compression pointer to the question.
    #[derive(Debug, Clone)]
    pub struct Answer {
        pub rtype: u16,
        pub ttl: u32,
        pub rdata: Vec<u8>,
    }

    impl Answer {
        pub fn a(ttl: u32, addr: [u8; 4]) -> Self {
            Answer { rtype: TYPE_A, ttl, rdata: addr.to_vec() }
        }

        pub fn aaaa(ttl: u32, addr: [u8; 16]) -> Self {
            Answer { rtype: TYPE_AAAA, ttl, rdata: addr.to_vec() }
        }

        /// CNAME whose target is the question name, written as a pointer.
        pub fn cname_to_question(ttl: u32) -> Self {
            Answer { rtype: TYPE_CNAME, ttl, rdata: vec![0xc0, 0x0c] }
        }
    }

    pub fn encode_name(name: &str, out: &mut Vec<u8>) {
        for label in name.split('.').filter(|l| !l.is_empty()) {
            out.push(label.len() as u8);
            out.extend_from_slice(label.as_bytes());
        }
        out.push(0);
    }

    fn header(id: u16, flags: u16, qd: u16, an: u16) -> Vec<u8> {
        let mut out = Vec::with_capacity(64);
        for v in [id, flags, qd, an, 0, 0] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn query(id: u16, name: &str, qtype: u16) -> Vec<u8> {
        let mut out = header(id, 0x0100, 1, 0);
        encode_name(name, &mut out);
        out.extend_from_slice(&qtype.to_be_bytes());
        out.extend_from_slice(&1u16.to_be_bytes());
        out
    }

    pub fn response(id: u16, name: &str, qtype: u16, answers: &[Answer]) -> Vec<u8> {
        let mut out = header(id, 0x8180, 1, answers.len() as u16);
        encode_name(name, &mut out);
        out.extend_from_slice(&qtype.to_be_bytes());
        out.extend_from_slice(&1u16.to_be_bytes());
        for a in answers {
            out.extend_from_slice(&[0xc0, 0x0c]);
            out.extend_from_slice(&a.rtype.to_be_bytes());
            out.extend_from_slice(&1u16.to_be_bytes());
            out.extend_from_slice(&a.ttl.to_be_bytes());
            out.extend_from_slice(&(a.rdata.len() as u16).to_be_bytes());
            out.extend_from_slice(&a.rdata);
        }
        out
    }
}
