//! Dataset-level operations: category canonicalization, merging labelled
//! datasets into one corpus, projection to the 12-feature basic set, and
//! class-distribution reports.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use crate::csv_io::{CsvSchema, DatasetRow, FeatureVariant, Features, FlowReader, FlowWriter, ReadMode};
use crate::error::{Error, Result};
use crate::features::FlowRecord;
use crate::label::{Label, BENIGN};

/// The basic feature set, in column order.
pub const BASIC_COLUMNS: [&str; 12] = [
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
    "TCP_FLAGS",
    "FLOW_DURATION_MILLISECONDS",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicRecord {
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
    pub tcp_flags: u8,
    pub flow_duration_milliseconds: u64,
}

impl BasicRecord {
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
            self.tcp_flags.to_string(),
            self.flow_duration_milliseconds.to_string(),
        ]
    }

    pub fn from_fields<S: AsRef<str>>(fields: &[S]) -> Result<Self, String> {
        if fields.len() != BASIC_COLUMNS.len() {
            return Err(format!(
                "expected {} feature columns, found {}",
                BASIC_COLUMNS.len(),
                fields.len()
            ));
        }
        fn p<T: std::str::FromStr>(fields: &[impl AsRef<str>], i: usize) -> Result<T, String> {
            let text = fields[i].as_ref();
            if text.starts_with('+') {
                return Err(format!("{}: invalid value {text:?}", BASIC_COLUMNS[i]));
            }
            text.parse()
                .map_err(|_| format!("{}: invalid value {text:?}", BASIC_COLUMNS[i]))
        }
        Ok(BasicRecord {
            ipv4_src_addr: p(fields, 0)?,
            ipv4_dst_addr: p(fields, 1)?,
            l4_src_port: p(fields, 2)?,
            l4_dst_port: p(fields, 3)?,
            protocol: p(fields, 4)?,
            l7_proto: p(fields, 5)?,
            in_bytes: p(fields, 6)?,
            out_bytes: p(fields, 7)?,
            in_pkts: p(fields, 8)?,
            out_pkts: p(fields, 9)?,
            tcp_flags: p(fields, 10)?,
            flow_duration_milliseconds: p(fields, 11)?,
        })
    }
}

pub fn project_basic(record: &FlowRecord) -> BasicRecord {
    BasicRecord {
        ipv4_src_addr: record.ipv4_src_addr,
        ipv4_dst_addr: record.ipv4_dst_addr,
        l4_src_port: record.l4_src_port,
        l4_dst_port: record.l4_dst_port,
        protocol: record.protocol,
        l7_proto: record.l7_proto,
        in_bytes: record.in_bytes,
        out_bytes: record.out_bytes,
        in_pkts: record.in_pkts,
        out_pkts: record.out_pkts,
        tcp_flags: record.tcp_flags,
        flow_duration_milliseconds: record.flow_duration_milliseconds,
    }
}

/// Projects a row to the basic set, keeping its label and dataset columns.
pub fn project_row(row: &DatasetRow) -> DatasetRow {
    DatasetRow {
        features: Features::Basic(row.features.basic()),
        label: row.label.clone(),
        dataset: row.dataset.clone(),
    }
}

/// Renames that fold source-dataset attack names into parent categories,
/// as `source,canonical` lines.
pub const DEFAULT_CATEGORY_MAPPING: &str = "\
# source,canonical
Benign,Benign
DoS attacks-Hulk,DoS
DoS attacks-SlowHTTPTest,DoS
DoS attacks-GoldenEye,DoS
DoS attacks-Slowloris,DoS
DDoS attack-LOIC-UDP,DDoS
DDoS attack-HOIC,DDoS
DDoS attacks-LOIC-HTTP,DDoS
FTP-BruteForce,Brute Force
SSH-Bruteforce,Brute Force
Brute Force -Web,Brute Force
Brute Force -XSS,Brute Force
SQL Injection,Injection
";

/// Ordered source → canonical category renames. Names not listed map to
/// themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMapping {
    entries: Vec<(String, String)>,
    lookup: HashMap<String, usize>,
}

impl Default for CategoryMapping {
    fn default() -> Self {
        CategoryMapping::parse(DEFAULT_CATEGORY_MAPPING).expect("built-in mapping is valid")
    }
}

impl CategoryMapping {
    pub fn identity() -> Self {
        CategoryMapping {
            entries: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    /// Builds a mapping, rejecting ones that are not functions, that move
    /// `Benign`, or that are not idempotent.
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut mapping = CategoryMapping::identity();
        for (source, canonical) in pairs {
            if source.is_empty() || canonical.is_empty() {
                return Err(Error::Config("category names must be non-empty".into()));
            }
            if source == BENIGN && canonical != BENIGN {
                return Err(Error::Config(format!("{BENIGN} must map to {BENIGN}")));
            }
            match mapping.lookup.get(&source) {
                Some(&i) if mapping.entries[i].1 != canonical => {
                    return Err(Error::Config(format!(
                        "{source:?} maps to both {:?} and {canonical:?}",
                        mapping.entries[i].1
                    )))
                }
                Some(_) => continue,
                None => {}
            }
            mapping.lookup.insert(source.clone(), mapping.entries.len());
            mapping.entries.push((source, canonical));
        }
        for (source, canonical) in &mapping.entries {
            let again = mapping.map(canonical);
            if again != canonical {
                return Err(Error::Config(format!(
                    "{source:?} -> {canonical:?} -> {again:?} is not idempotent"
                )));
            }
        }
        Ok(mapping)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((source, canonical)) = line.split_once(',') else {
                return Err(Error::parse(idx as u64 + 1, format!("expected source,canonical: {line:?}")));
            };
            let (source, canonical) = (source.trim(), canonical.trim());
            if canonical.contains(',') {
                return Err(Error::parse(idx as u64 + 1, format!("too many fields: {line:?}")));
            }
            pairs.push((source.to_string(), canonical.to_string()));
        }
        CategoryMapping::new(pairs)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CategoryMapping::parse(&text)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn map<'a>(&'a self, name: &'a str) -> &'a str {
        match self.lookup.get(name) {
            Some(&i) => &self.entries[i].1,
            None => name,
        }
    }

    pub fn map_label(&self, label: &Label) -> Label {
        Label::from_category(self.map(label.attack()))
    }
}

pub fn map_category<'a>(name: &'a str, mapping: &'a CategoryMapping) -> &'a str {
    mapping.map(name)
}

/// A labelled dataset file and what a scan of it found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub name: String,
    pub path: PathBuf,
    pub schema: CsvSchema,
    pub row_count: u64,
    pub histogram: BTreeMap<String, u64>,
}

impl DatasetManifest {
    /// Reads the file once to record its layout, size and class histogram.
    pub fn scan(name: impl Into<String>, path: impl Into<PathBuf>, mode: ReadMode) -> Result<Self> {
        let path = path.into();
        let mut reader = FlowReader::open(&path, mode)?;
        let schema = reader.schema();
        let mut histogram = BTreeMap::new();
        let mut row_count = 0;
        for row in reader.by_ref() {
            let row = row?;
            row_count += 1;
            if let Some(label) = &row.label {
                *histogram.entry(label.attack().to_string()).or_insert(0) += 1;
            }
        }
        Ok(DatasetManifest {
            name: name.into(),
            path,
            schema,
            row_count,
            histogram,
        })
    }

    pub fn variant(&self) -> FeatureVariant {
        self.schema.variant
    }
}

fn merged_schema(schemas: impl IntoIterator<Item = CsvSchema>) -> Result<CsvSchema> {
    let mut first: Option<CsvSchema> = None;
    for schema in schemas {
        if !schema.labelled {
            return Err(Error::SchemaMismatch("merge inputs must be labelled".into()));
        }
        if schema.dataset {
            return Err(Error::SchemaMismatch("merge input already has a Dataset column".into()));
        }
        match first {
            None => first = Some(schema),
            Some(f) if f != schema => {
                return Err(Error::SchemaMismatch(format!(
                    "cannot merge {} and {} feature sets",
                    f.variant, schema.variant
                )))
            }
            Some(_) => {}
        }
    }
    first
        .map(CsvSchema::with_dataset)
        .ok_or_else(|| Error::SchemaMismatch("nothing to merge".into()))
}

fn merged_row(row: &DatasetRow, name: &str, mapping: &CategoryMapping) -> DatasetRow {
    DatasetRow {
        features: row.features.clone(),
        label: row.label.as_ref().map(|l| mapping.map_label(l)),
        dataset: Some(name.to_string()),
    }
}

/// In-memory merge: concatenates the inputs in order, canonicalizes
/// categories, and tags each row with its dataset name.
pub fn merge_rows(inputs: &[(&str, &[DatasetRow])], mapping: &CategoryMapping) -> Result<Vec<DatasetRow>> {
    merged_schema(
        inputs
            .iter()
            .flat_map(|(_, rows)| rows.iter().map(DatasetRow::schema)),
    )?;
    let mut out = Vec::with_capacity(inputs.iter().map(|(_, r)| r.len()).sum());
    for (name, rows) in inputs {
        out.extend(rows.iter().map(|row| merged_row(row, name, mapping)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeSummary {
    pub rows: u64,
    pub per_dataset: Vec<(String, u64)>,
    pub report: DistributionReport,
}

/// Streams the manifests' files into `writer`, whose schema must be the
/// merged layout (inputs' layout plus `Dataset`).
pub fn merge<W: Write>(
    manifests: &[DatasetManifest],
    mapping: &CategoryMapping,
    writer: &mut FlowWriter<W>,
    mode: ReadMode,
) -> Result<MergeSummary> {
    let schema = merged_schema(manifests.iter().map(|m| m.schema))?;
    if writer.schema() != schema {
        return Err(Error::SchemaMismatch(format!(
            "output layout {:?} does not fit merged layout {:?}",
            writer.schema(),
            schema
        )));
    }
    let mut summary = MergeSummary::default();
    for manifest in manifests {
        let mut reader = FlowReader::open(&manifest.path, mode)?;
        if reader.schema() != manifest.schema {
            return Err(Error::SchemaMismatch(format!(
                "{} changed layout since it was scanned",
                manifest.path.display()
            )));
        }
        let mut count = 0u64;
        for row in reader.by_ref() {
            let row = merged_row(&row?, &manifest.name, mapping);
            if let Some(label) = &row.label {
                summary.report.add(label);
            }
            writer.write_row(&row)?;
            count += 1;
        }
        summary.per_dataset.push((manifest.name.clone(), count));
        summary.rows += count;
    }
    Ok(summary)
}

pub fn merge_to_path(
    manifests: &[DatasetManifest],
    mapping: &CategoryMapping,
    out: impl AsRef<Path>,
    mode: ReadMode,
) -> Result<MergeSummary> {
    let schema = merged_schema(manifests.iter().map(|m| m.schema))?;
    let mut writer = FlowWriter::create(out, schema)?;
    let summary = merge(manifests, mapping, &mut writer, mode)?;
    writer.finish()?;
    Ok(summary)
}

/// Class distribution of a labelled dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistributionReport {
    pub total: u64,
    pub benign: u64,
    pub attack: u64,
    pub categories: BTreeMap<String, u64>,
}

fn percent(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * part as f64 / total as f64
    }
}

impl DistributionReport {
    pub fn add(&mut self, label: &Label) {
        self.total += 1;
        if label.is_attack() {
            self.attack += 1;
        } else {
            self.benign += 1;
        }
        *self.categories.entry(label.attack().to_string()).or_insert(0) += 1;
    }

    pub fn benign_percent(&self) -> f64 {
        percent(self.benign, self.total)
    }

    pub fn attack_percent(&self) -> f64 {
        percent(self.attack, self.total)
    }

    /// `benign% / attack%` with two decimals, e.g. `96.02% / 3.98%`.
    pub fn split(&self) -> String {
        format!("{:.2}% / {:.2}%", self.benign_percent(), self.attack_percent())
    }

    /// Categories with Benign first, then by descending count, then name.
    pub fn ordered(&self) -> Vec<(&str, u64)> {
        let mut rows: Vec<(&str, u64)> = self.categories.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        rows.sort_by(|a, b| {
            (a.0 != BENIGN, std::cmp::Reverse(a.1), a.0).cmp(&(b.0 != BENIGN, std::cmp::Reverse(b.1), b.0))
        });
        rows
    }
}

impl fmt::Display for DistributionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Class,Count,Percent")?;
        for (name, count) in self.ordered() {
            writeln!(f, "{name},{count},{:.2}%", percent(count, self.total))?;
        }
        writeln!(f, "Total,{},100.00%", self.total)?;
        writeln!(f, "Benign / Attack: {}", self.split())
    }
}

pub fn stats<'a>(labels: impl IntoIterator<Item = &'a Label>) -> DistributionReport {
    let mut report = DistributionReport::default();
    for label in labels {
        report.add(label);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_renames() {
        let m = CategoryMapping::default();
        for (from, to) in [
            ("DoS attacks-Hulk", "DoS"),
            ("DoS attacks-SlowHTTPTest", "DoS"),
            ("DoS attacks-GoldenEye", "DoS"),
            ("DoS attacks-Slowloris", "DoS"),
            ("DDoS attack-LOIC-UDP", "DDoS"),
            ("DDoS attack-HOIC", "DDoS"),
            ("DDoS attacks-LOIC-HTTP", "DDoS"),
            ("FTP-BruteForce", "Brute Force"),
            ("SSH-Bruteforce", "Brute Force"),
            ("Brute Force -Web", "Brute Force"),
            ("Brute Force -XSS", "Brute Force"),
            ("SQL Injection", "Injection"),
            ("Benign", "Benign"),
            ("Worms", "Worms"),
        ] {
            assert_eq!(map_category(from, &m), to, "{from}");
        }
    }

    #[test]
    fn mapping_validation() {
        assert!(CategoryMapping::parse("a,b\na,c\n").is_err());
        assert!(CategoryMapping::parse("a,b\na,b\n").is_ok());
        assert!(CategoryMapping::parse("Benign,Normal\n").is_err());
        assert!(CategoryMapping::parse("a,b\nb,c\n").is_err());
        assert!(CategoryMapping::parse("a,b\nb,b\n").is_ok());
        assert!(matches!(
            CategoryMapping::parse("ok,fine\njunk\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(CategoryMapping::parse("a,b,c\n").is_err());
    }

    #[test]
    fn mapping_to_benign_clears_attack_label() {
        let m = CategoryMapping::parse("Normal,Benign\n").unwrap();
        assert_eq!(m.map_label(&Label::new_attack("Normal").unwrap()), Label::benign());
    }

    #[test]
    fn split_formatting() {
        let mut labels = vec![Label::benign(); 96];
        labels.extend(std::iter::repeat(Label::new_attack("DoS").unwrap()).take(4));
        let r = stats(&labels);
        assert_eq!(r.split(), "96.00% / 4.00%");
        assert_eq!(stats(&[]).split(), "0.00% / 0.00%");
        let text = r.to_string();
        assert!(text.starts_with("Class,Count,Percent\nBenign,96,96.00%\nDoS,4,4.00%\n"));
    }
}
