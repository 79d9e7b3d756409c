use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowKey;
use crate::ingest::{PROTO_ICMP, PROTO_TCP, PROTO_UDP};

/// Built-in port table, in the `protocol,port,id` file format. Ids follow
/// the nDPI protocol numbering.
pub const DEFAULT_L7_TABLE: &str = "\
# protocol,port,id
tcp,21,1
tcp,110,2
tcp,25,3
tcp,143,4
udp,53,5
tcp,53,5
tcp,80,7
udp,123,9
udp,161,14
udp,67,18
udp,68,18
tcp,3306,20
tcp,23,70
tcp,443,91
tcp,22,92
";

/// Port-based application protocol classifier.
///
/// The lookup port is the lower of the two flow ports; 0 means unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L7Table {
    ids: HashMap<(u8, u16), u16>,
}

impl Default for L7Table {
    fn default() -> Self {
        L7Table::parse(DEFAULT_L7_TABLE).expect("built-in L7 table parses")
    }
}

fn parse_protocol(s: &str) -> Option<u8> {
    match s.to_ascii_lowercase().as_str() {
        "tcp" => Some(PROTO_TCP),
        "udp" => Some(PROTO_UDP),
        "icmp" => Some(PROTO_ICMP),
        other => other.parse().ok(),
    }
}

impl L7Table {
    pub fn empty() -> Self {
        L7Table {
            ids: HashMap::new(),
        }
    }

    /// Parses `protocol,port,id` lines. Blank lines and `#` comments are
    /// ignored; anything else that does not parse is an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = L7Table::empty();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx as u64 + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [proto, port, id] = fields[..] else {
                return Err(Error::parse(lineno, format!("expected protocol,port,id: {line:?}")));
            };
            let proto = parse_protocol(proto)
                .ok_or_else(|| Error::parse(lineno, format!("unknown protocol {proto:?}")))?;
            let port: u16 = port
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid port {port:?}")))?;
            let id: u16 = id
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid protocol id {id:?}")))?;
            table.insert(proto, port, id);
        }
        Ok(table)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        L7Table::parse(&text)
    }

    pub fn insert(&mut self, protocol: u8, port: u16, id: u16) {
        self.ids.insert((protocol, port), id);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn lookup(&self, protocol: u8, port: u16) -> u16 {
        self.ids.get(&(protocol, port)).copied().unwrap_or(0)
    }

    pub fn classify(&self, key: &FlowKey) -> u16 {
        self.lookup(key.l4_protocol, key.client_port.min(key.server_port))
    }
}
