//! Ground-truth matching.
//!
//! A flow is an attack when its five-tuple matches a published attack
//! event; otherwise it is benign. Events may leave ports or protocol as
//! `*` wildcards and may carry a time window.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::net::Ipv4Addr;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FlowRecord;
use crate::ingest::{PROTO_ICMP, PROTO_TCP, PROTO_UDP};

pub const BENIGN: &str = "Benign";

/// Binary class plus attack category. `class == 1` iff the category is not
/// `Benign`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    class: u8,
    attack: String,
}

impl Label {
    pub fn benign() -> Self {
        Label {
            class: 0,
            attack: BENIGN.to_string(),
        }
    }

    pub fn new_attack(category: impl Into<String>) -> std::result::Result<Self, String> {
        let attack = category.into();
        if attack.is_empty() || attack == BENIGN {
            return Err(format!("{attack:?} is not an attack category"));
        }
        Ok(Label { class: 1, attack })
    }

    /// A label from its category alone.
    pub fn from_category(category: &str) -> Self {
        Label::new_attack(category).unwrap_or_else(|_| Label::benign())
    }

    /// Parses the `Label` and `Attack` CSV columns, enforcing consistency.
    pub fn from_columns(class: &str, attack: &str) -> std::result::Result<Self, String> {
        match class {
            "0" if attack == BENIGN => Ok(Label::benign()),
            "1" => Label::new_attack(attack),
            _ => Err(format!("Label {class:?} inconsistent with Attack {attack:?}")),
        }
    }

    pub fn class(&self) -> u8 {
        self.class
    }

    pub fn attack(&self) -> &str {
        &self.attack
    }

    pub fn is_attack(&self) -> bool {
        self.class == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledFlow {
    pub record: FlowRecord,
    pub label: Label,
}

/// Inclusive microsecond interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSpan {
    pub start_us: u64,
    pub end_us: u64,
}

impl TimeSpan {
    pub fn overlaps(&self, other: &TimeSpan) -> bool {
        self.start_us <= other.end_us && other.start_us <= self.end_us
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthEvent {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: Option<u16>,
    pub dst_port: Option<u16>,
    pub l4_protocol: Option<u8>,
    pub attack: String,
    pub window: Option<TimeSpan>,
}

impl GroundTruthEvent {
    fn wildcards(&self) -> u8 {
        self.src_port.is_none() as u8 + self.dst_port.is_none() as u8 + self.l4_protocol.is_none() as u8
    }

    fn matches_oriented(&self, t: &FiveTuple) -> bool {
        self.src_ip == t.src_ip
            && self.dst_ip == t.dst_ip
            && self.src_port.map_or(true, |p| p == t.src_port)
            && self.dst_port.map_or(true, |p| p == t.dst_port)
            && self.l4_protocol.map_or(true, |p| p == t.protocol)
    }
}

/// The matching view of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiveTuple {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: u8,
}

impl FiveTuple {
    pub fn of(record: &FlowRecord) -> Self {
        FiveTuple {
            src_ip: record.ipv4_src_addr,
            dst_ip: record.ipv4_dst_addr,
            src_port: record.l4_src_port,
            dst_port: record.l4_dst_port,
            protocol: record.protocol,
        }
    }

    pub fn reversed(&self) -> Self {
        FiveTuple {
            src_ip: self.dst_ip,
            dst_ip: self.src_ip,
            src_port: self.dst_port,
            dst_port: self.src_port,
            protocol: self.protocol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelOptions {
    /// Match events against both flow orientations.
    pub bidirectional: bool,
    /// Require event windows to overlap the flow's span when both are known.
    pub time_windows: bool,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions {
            bidirectional: true,
            time_windows: false,
        }
    }
}

/// A ground-truth row that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedEvent {
    pub line: u64,
    pub message: String,
}

/// Immutable event index, shareable across labelling threads.
#[derive(Debug, Clone, Default)]
pub struct LabelIndex {
    events: Vec<GroundTruthEvent>,
    by_hosts: HashMap<(Ipv4Addr, Ipv4Addr), Vec<usize>>,
    skipped: Vec<SkippedEvent>,
    options: LabelOptions,
}

const REQUIRED_COLUMNS: [&str; 6] = ["src_ip", "dst_ip", "src_port", "dst_port", "protocol", "attack"];
const START_COLUMNS: [&str; 2] = ["start_us", "start"];
const END_COLUMNS: [&str; 2] = ["end_us", "end"];

fn parse_port(s: &str) -> std::result::Result<Option<u16>, String> {
    match s {
        "*" => Ok(None),
        _ => s.parse().map(Some).map_err(|_| format!("invalid port {s:?}")),
    }
}

fn parse_protocol(s: &str) -> std::result::Result<Option<u8>, String> {
    match s.to_ascii_lowercase().as_str() {
        "*" => Ok(None),
        "tcp" => Ok(Some(PROTO_TCP)),
        "udp" => Ok(Some(PROTO_UDP)),
        "icmp" => Ok(Some(PROTO_ICMP)),
        other => other
            .parse()
            .map(Some)
            .map_err(|_| format!("invalid protocol {s:?}")),
    }
}

impl LabelIndex {
    pub fn new(events: Vec<GroundTruthEvent>) -> Self {
        let mut index = LabelIndex::default();
        for event in events {
            index.push(event);
        }
        index
    }

    fn push(&mut self, event: GroundTruthEvent) {
        let id = self.events.len();
        self.by_hosts
            .entry((event.src_ip, event.dst_ip))
            .or_default()
            .push(id);
        self.events.push(event);
    }

    pub fn with_options(mut self, options: LabelOptions) -> Self {
        self.options = options;
        self
    }

    pub fn options(&self) -> LabelOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[GroundTruthEvent] {
        &self.events
    }

    /// Rows dropped while loading.
    pub fn skipped(&self) -> &[SkippedEvent] {
        &self.skipped
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        LabelIndex::from_reader(file).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Loads the ground-truth CSV. Missing required columns fail the load;
    /// unparseable rows are skipped and reported through [`Self::skipped`].
    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader.headers()?.clone();
        let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
        let missing: Vec<&str> = REQUIRED_COLUMNS
            .iter()
            .copied()
            .filter(|c| find(c).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!(
                "ground truth lacks required columns: {}",
                missing.join(", ")
            )));
        }
        let cols: Vec<usize> = REQUIRED_COLUMNS.iter().map(|c| find(c).unwrap()).collect();
        let start_col = START_COLUMNS.iter().find_map(|c| find(c));
        let end_col = END_COLUMNS.iter().find_map(|c| find(c));

        let mut index = LabelIndex::default();
        let mut record = csv::StringRecord::new();
        loop {
            match reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {}
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    index.skipped.push(SkippedEvent { line, message: e.to_string() });
                    continue;
                }
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let get = |i: usize| record.get(i).unwrap_or("");
            let parsed = (|| -> std::result::Result<GroundTruthEvent, String> {
                let src_ip = get(cols[0]).parse().map_err(|_| format!("invalid src_ip {:?}", get(cols[0])))?;
                let dst_ip = get(cols[1]).parse().map_err(|_| format!("invalid dst_ip {:?}", get(cols[1])))?;
                let attack = get(cols[5]).to_string();
                if attack.is_empty() || attack == BENIGN {
                    return Err(format!("{attack:?} is not an attack category"));
                }
                let time = |col: Option<usize>| -> std::result::Result<Option<u64>, String> {
                    match col.map(get) {
                        None | Some("") => Ok(None),
                        Some(v) => v.parse().map(Some).map_err(|_| format!("invalid timestamp {v:?}")),
                    }
                };
                let window = match (time(start_col)?, time(end_col)?) {
                    (None, None) => None,
                    (Some(s), Some(e)) if s <= e => Some(TimeSpan { start_us: s, end_us: e }),
                    (Some(_), Some(_)) => return Err("start after end".into()),
                    _ => return Err("time window needs both start and end".into()),
                };
                Ok(GroundTruthEvent {
                    src_ip,
                    dst_ip,
                    src_port: parse_port(get(cols[2]))?,
                    dst_port: parse_port(get(cols[3]))?,
                    l4_protocol: parse_protocol(get(cols[4]))?,
                    attack,
                    window,
                })
            })();
            match parsed {
                Ok(event) => index.push(event),
                Err(message) => index.skipped.push(SkippedEvent { line, message }),
            }
        }
        Ok(index)
    }

    /// The event that labels `tuple`, if any.
    ///
    /// With several candidates the most specific (fewest wildcards) wins,
    /// then the earliest in file order.
    pub fn lookup(&self, tuple: &FiveTuple, span: Option<TimeSpan>) -> Option<&GroundTruthEvent> {
        let forward = self.candidates(tuple);
        let reverse = if self.options.bidirectional {
            self.candidates(&tuple.reversed())
        } else {
            Default::default()
        };
        forward
            .into_iter()
            .chain(reverse)
            .filter(|&id| self.window_ok(&self.events[id], span))
            .min_by_key(|&id| (self.events[id].wildcards(), id))
            .map(|id| &self.events[id])
    }

    fn candidates(&self, tuple: &FiveTuple) -> Vec<usize> {
        self.by_hosts
            .get(&(tuple.src_ip, tuple.dst_ip))
            .map(|ids| {
                ids.iter()
                    .copied()
                    .filter(|&id| self.events[id].matches_oriented(tuple))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn window_ok(&self, event: &GroundTruthEvent, span: Option<TimeSpan>) -> bool {
        match (self.options.time_windows, event.window, span) {
            (true, Some(window), Some(span)) => window.overlaps(&span),
            _ => true,
        }
    }

    pub fn label(&self, tuple: &FiveTuple, span: Option<TimeSpan>) -> Label {
        match self.lookup(tuple, span) {
            Some(event) => Label::new_attack(event.attack.clone()).expect("validated at load"),
            None => Label::benign(),
        }
    }
}

pub fn label_flow(index: &LabelIndex, record: FlowRecord) -> LabelledFlow {
    label_flow_at(index, record, None)
}

/// Like [`label_flow`], with the flow's time span for windowed events.
pub fn label_flow_at(index: &LabelIndex, record: FlowRecord, span: Option<TimeSpan>) -> LabelledFlow {
    let label = index.label(&FiveTuple::of(&record), span);
    LabelledFlow { record, label }
}

/// Per-category counts of a labelled stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub total: u64,
    pub benign: u64,
    pub attack: u64,
    pub categories: BTreeMap<String, u64>,
    pub skipped_events: Vec<SkippedEvent>,
}

impl LabelSummary {
    pub fn add(&mut self, label: &Label) {
        self.total += 1;
        if label.is_attack() {
            self.attack += 1;
        } else {
            self.benign += 1;
        }
        *self.categories.entry(label.attack().to_string()).or_default() += 1;
    }

    /// Benign to attack ratio scaled to ten samples, e.g. `9.6 to 0.4`.
    pub fn ratio(&self) -> String {
        if self.total == 0 {
            return "0.0 to 0.0".into();
        }
        let benign = 10.0 * self.benign as f64 / self.total as f64;
        let attack = 10.0 * self.attack as f64 / self.total as f64;
        format!("{benign:.1} to {attack:.1}")
    }
}

impl fmt::Display for LabelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "flows: {} (benign {}, attack {})", self.total, self.benign, self.attack)?;
        writeln!(f, "benign to attack ratio: {}", self.ratio())?;
        for (category, count) in &self.categories {
            writeln!(f, "  {category}: {count}")?;
        }
        if !self.skipped_events.is_empty() {
            writeln!(f, "skipped ground-truth rows: {}", self.skipped_events.len())?;
        }
        Ok(())
    }
}

/// Labels every flow, preserving order and count.
pub fn label_dataset<I>(flows: I, index: &LabelIndex) -> (Vec<LabelledFlow>, LabelSummary)
where
    I: IntoIterator<Item = FlowRecord>,
{
    let mut summary = LabelSummary {
        skipped_events: index.skipped().to_vec(),
        ..Default::default()
    };
    let labelled = flows
        .into_iter()
        .map(|record| {
            let flow = label_flow(index, record);
            summary.add(&flow.label);
            flow
        })
        .collect();
    (labelled, summary)
}
