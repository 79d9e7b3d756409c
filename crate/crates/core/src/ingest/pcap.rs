//! Classic (libpcap) capture file reader.
//!
//! ```text
//! global header (24 bytes)
//!   magic u32 | version_major u16 | version_minor u16 | thiszone i32
//!   sigfigs u32 | snaplen u32 | network (link type) u32
//! record header (16 bytes)
//!   ts_sec u32 | ts_frac u32 | incl_len u32 | orig_len u32
//! ```

use std::fs::File;
use std::io::{BufReader, ErrorKind, Read};
use std::path::Path;

use crate::error::{Error, Result};

pub const LINKTYPE_ETHERNET: u32 = 1;

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

// Anything larger is a corrupt record header, not a real frame.
const MAX_RECORD_LEN: u32 = 0x0400_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampResolution {
    Micros,
    Nanos,
}

/// One raw captured frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub timestamp_us: u64,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

pub struct PcapReader<R> {
    inner: R,
    big_endian: bool,
    resolution: TimestampResolution,
    link_type: u32,
    snaplen: u32,
    records: u64,
    done: bool,
}

impl PcapReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufReader::with_capacity(1 << 16, file)).map_err(|e| match e {
            Error::UnsupportedFormat(msg) => {
                Error::UnsupportedFormat(format!("{}: {msg}", path.display()))
            }
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}

impl<R: Read> PcapReader<R> {
    /// Parses the global header. Only Ethernet captures are accepted.
    pub fn new(mut inner: R) -> Result<Self> {
        let mut header = [0u8; 24];
        if let Err(e) = inner.read_exact(&mut header) {
            return Err(match e.kind() {
                ErrorKind::UnexpectedEof => {
                    Error::UnsupportedFormat("file shorter than a pcap global header".into())
                }
                _ => Error::io("<capture>", e),
            });
        }
        let magic_le = u32::from_le_bytes(header[0..4].try_into().unwrap());
        let (big_endian, resolution) = match magic_le {
            MAGIC_MICROS => (false, TimestampResolution::Micros),
            MAGIC_NANOS => (false, TimestampResolution::Nanos),
            m if m.swap_bytes() == MAGIC_MICROS => (true, TimestampResolution::Micros),
            m if m.swap_bytes() == MAGIC_NANOS => (true, TimestampResolution::Nanos),
            m => {
                return Err(Error::UnsupportedFormat(format!(
                    "unrecognized magic number {m:#010x}"
                )))
            }
        };
        let read_u32 = |b: &[u8]| {
            let raw: [u8; 4] = b.try_into().unwrap();
            if big_endian {
                u32::from_be_bytes(raw)
            } else {
                u32::from_le_bytes(raw)
            }
        };
        let snaplen = read_u32(&header[16..20]);
        let link_type = read_u32(&header[20..24]);
        if link_type != LINKTYPE_ETHERNET {
            return Err(Error::UnsupportedFormat(format!(
                "link type {link_type} is not Ethernet"
            )));
        }
        Ok(PcapReader {
            inner,
            big_endian,
            resolution,
            link_type,
            snaplen,
            records: 0,
            done: false,
        })
    }

    pub fn link_type(&self) -> u32 {
        self.link_type
    }

    pub fn snaplen(&self) -> u32 {
        self.snaplen
    }

    pub fn resolution(&self) -> TimestampResolution {
        self.resolution
    }

    pub fn is_big_endian(&self) -> bool {
        self.big_endian
    }

    fn u32_at(&self, b: &[u8]) -> u32 {
        let raw: [u8; 4] = b.try_into().unwrap();
        if self.big_endian {
            u32::from_be_bytes(raw)
        } else {
            u32::from_le_bytes(raw)
        }
    }

    /// Reads the next record. `Ok(None)` at a clean end of file.
    pub fn next_frame(&mut self) -> Result<Option<Frame>> {
        if self.done {
            return Ok(None);
        }
        let mut header = [0u8; 16];
        match read_full(&mut self.inner, &mut header) {
            Ok(0) => {
                self.done = true;
                return Ok(None);
            }
            Ok(16) => {}
            Ok(_) => return Err(self.truncated()),
            Err(e) => {
                self.done = true;
                return Err(Error::io("<capture>", e));
            }
        }
        let ts_sec = self.u32_at(&header[0..4]) as u64;
        let ts_frac = self.u32_at(&header[4..8]) as u64;
        let incl_len = self.u32_at(&header[8..12]);
        let orig_len = self.u32_at(&header[12..16]);
        if incl_len > MAX_RECORD_LEN {
            self.done = true;
            return Err(Error::UnsupportedFormat(format!(
                "record {} claims {incl_len} captured bytes",
                self.records + 1
            )));
        }
        let mut data = vec![0u8; incl_len as usize];
        match read_full(&mut self.inner, &mut data) {
            Ok(n) if n == data.len() => {}
            Ok(_) => return Err(self.truncated()),
            Err(e) => {
                self.done = true;
                return Err(Error::io("<capture>", e));
            }
        }
        let frac_us = match self.resolution {
            TimestampResolution::Micros => ts_frac,
            TimestampResolution::Nanos => ts_frac / 1000,
        };
        self.records += 1;
        Ok(Some(Frame {
            timestamp_us: ts_sec * 1_000_000 + frac_us,
            orig_len,
            data,
        }))
    }

    fn truncated(&mut self) -> Error {
        self.done = true;
        Error::TruncatedFile {
            packets: self.records,
        }
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Like `read_exact`, but reports how many bytes were read before EOF.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
