//! Flow-record CSV files.
//!
//! A file starts with a header naming the feature columns (43 extended or
//! 12 basic), optionally followed by `Label,Attack` and then `Dataset`.
//! Separator is `,`, records end in `\n`. Integers carry no leading zeros,
//! rates have at most six fractional digits with trailing zeros trimmed,
//! addresses are dotted quads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::{BasicRecord, BASIC_COLUMNS};
use crate::error::{Error, Result};
use crate::features::{FlowRecord, FEATURE_COLUMNS};
use crate::label::{Label, LabelledFlow};

pub const LABEL_COLUMN: &str = "Label";
pub const ATTACK_COLUMN: &str = "Attack";
pub const DATASET_COLUMN: &str = "Dataset";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureVariant {
    Basic,
    Extended,
}

impl FeatureVariant {
    pub fn feature_columns(self) -> &'static [&'static str] {
        match self {
            FeatureVariant::Basic => &BASIC_COLUMNS,
            FeatureVariant::Extended => &FEATURE_COLUMNS,
        }
    }
}

impl std::str::FromStr for FeatureVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "basic" => Ok(FeatureVariant::Basic),
            "extended" => Ok(FeatureVariant::Extended),
            other => Err(format!("unknown feature variant {other:?}")),
        }
    }
}

impl std::fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureVariant::Basic => "basic",
            FeatureVariant::Extended => "extended",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CsvSchema {
    pub variant: FeatureVariant,
    pub labelled: bool,
    /// Trailing `Dataset` column; only valid on labelled schemas.
    pub dataset: bool,
}

impl CsvSchema {
    pub const EXTENDED: CsvSchema = CsvSchema::new(FeatureVariant::Extended, false, false);
    pub const EXTENDED_LABELLED: CsvSchema = CsvSchema::new(FeatureVariant::Extended, true, false);
    pub const BASIC_LABELLED: CsvSchema = CsvSchema::new(FeatureVariant::Basic, true, false);

    pub const fn new(variant: FeatureVariant, labelled: bool, dataset: bool) -> Self {
        CsvSchema {
            variant,
            labelled,
            dataset,
        }
    }

    pub fn with_dataset(self) -> Self {
        CsvSchema {
            dataset: true,
            labelled: true,
            ..self
        }
    }

    pub fn with_variant(self, variant: FeatureVariant) -> Self {
        CsvSchema { variant, ..self }
    }

    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = self.variant.feature_columns().to_vec();
        if self.labelled {
            cols.push(LABEL_COLUMN);
            cols.push(ATTACK_COLUMN);
        }
        if self.dataset {
            cols.push(DATASET_COLUMN);
        }
        cols
    }

    fn all() -> impl Iterator<Item = CsvSchema> {
        [FeatureVariant::Extended, FeatureVariant::Basic]
            .into_iter()
            .flat_map(|v| {
                [
                    CsvSchema::new(v, false, false),
                    CsvSchema::new(v, true, false),
                    CsvSchema::new(v, true, true),
                ]
            })
    }

    /// Identifies the schema a header row declares.
    pub fn from_header<S: AsRef<str>>(header: &[S]) -> Result<Self> {
        let names: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        if let Some(schema) = CsvSchema::all().find(|s| s.columns() == names) {
            return Ok(schema);
        }
        // Name the first column that differs from the closest known layout.
        let closest = CsvSchema::all()
            .filter(|s| s.columns().len() == names.len())
            .chain(std::iter::once(CsvSchema::EXTENDED_LABELLED))
            .next()
            .unwrap();
        let expected = closest.columns();
        let detail = expected
            .iter()
            .zip(&names)
            .enumerate()
            .find(|(_, (e, n))| e != n)
            .map(|(i, (e, n))| format!("column {} is {n:?}, expected {e:?}", i + 1))
            .unwrap_or_else(|| {
                format!("{} columns, expected {}", names.len(), expected.len())
            });
        Err(Error::Schema(format!("unrecognized header: {detail}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Basic(BasicRecord),
    Extended(FlowRecord),
}

impl Features {
    pub fn variant(&self) -> FeatureVariant {
        match self {
            Features::Basic(_) => FeatureVariant::Basic,
            Features::Extended(_) => FeatureVariant::Extended,
        }
    }

    pub fn to_fields(&self) -> Vec<String> {
        match self {
            Features::Basic(r) => r.to_fields(),
            Features::Extended(r) => r.to_fields(),
        }
    }

    /// The 12 basic columns, projected if needed.
    pub fn basic(&self) -> BasicRecord {
        match self {
            Features::Basic(r) => r.clone(),
            Features::Extended(r) => crate::dataset::project_basic(r),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub features: Features,
    pub label: Option<Label>,
    pub dataset: Option<String>,
}

impl DatasetRow {
    pub fn unlabelled(record: FlowRecord) -> Self {
        DatasetRow {
            features: Features::Extended(record),
            label: None,
            dataset: None,
        }
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema::new(
            self.features.variant(),
            self.label.is_some(),
            self.dataset.is_some(),
        )
    }
}

impl From<LabelledFlow> for DatasetRow {
    fn from(flow: LabelledFlow) -> Self {
        DatasetRow {
            features: Features::Extended(flow.record),
            label: Some(flow.label),
            dataset: None,
        }
    }
}

pub struct FlowWriter<W: Write> {
    inner: csv::Writer<W>,
    schema: CsvSchema,
    rows: u64,
}

impl FlowWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        FlowWriter::new(BufWriter::new(file), schema)
    }
}

impl<W: Write> FlowWriter<W> {
    /// Writes the header immediately, so an empty stream still yields a valid file.
    pub fn new(out: W, schema: CsvSchema) -> Result<Self> {
        if schema.dataset && !schema.labelled {
            return Err(Error::Schema("Dataset column requires Label and Attack".into()));
        }
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        inner.write_record(schema.columns())?;
        Ok(FlowWriter {
            inner,
            schema,
            rows: 0,
        })
    }

    pub fn schema(&self) -> CsvSchema {
        self.schema
    }

    pub fn write_row(&mut self, row: &DatasetRow) -> Result<()> {
        if row.schema() != self.schema {
            return Err(Error::Schema(format!(
                "row layout {:?} does not match file layout {:?}",
                row.schema(),
                self.schema
            )));
        }
        if let Features::Extended(r) = &row.features {
            if !r.rates_valid() {
                return Err(Error::Schema("rate fields must be finite and non-negative".into()));
            }
        }
        let mut fields = row.features.to_fields();
        if let Some(label) = &row.label {
            fields.push(label.class().to_string());
            fields.push(label.attack().to_string());
        }
        if let Some(name) = &row.dataset {
            fields.push(name.clone());
        }
        self.inner.write_record(&fields)?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes and returns the number of data rows written.
    pub fn finish(mut self) -> Result<u64> {
        self.inner.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(self.rows)
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::io("<csv output>", e.into_error()))
    }
}

pub fn write_flows<'a>(
    path: impl AsRef<Path>,
    schema: CsvSchema,
    rows: impl IntoIterator<Item = &'a DatasetRow>,
) -> Result<u64> {
    let mut writer = FlowWriter::create(path, schema)?;
    for row in rows {
        writer.write_row(row)?;
    }
    writer.finish()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ReadMode {
    #[default]
    Strict,
    /// Skip malformed rows, recording them in [`FlowReader::skipped`].
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

pub struct FlowReader<R: Read> {
    inner: csv::Reader<R>,
    schema: CsvSchema,
    mode: ReadMode,
    skipped: Vec<RowError>,
    record: csv::StringRecord,
    failed: bool,
}

impl FlowReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, mode: ReadMode) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        FlowReader::new(BufReader::new(file), mode).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

impl<R: Read> FlowReader<R> {
    pub fn new(input: R, mode: ReadMode) -> Result<Self> {
        let mut inner = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let header = inner.headers()?.clone();
        if header.is_empty() {
            return Err(Error::Schema("missing header row".into()));
        }
        let names: Vec<&str> = header.iter().collect();
        let schema = CsvSchema::from_header(&names)?;
        Ok(FlowReader {
            inner,
            schema,
            mode,
            skipped: Vec::new(),
            record: csv::StringRecord::new(),
            failed: false,
        })
    }

    pub fn schema(&self) -> CsvSchema {
        self.schema
    }

    pub fn skipped(&self) -> &[RowError] {
        &self.skipped
    }

    fn parse_row(&self) -> std::result::Result<DatasetRow, String> {
        let rec = &self.record;
        let width = self.schema.columns().len();
        if rec.len() != width {
            return Err(format!("expected {width} fields, found {}", rec.len()));
        }
        let n = self.schema.variant.feature_columns().len();
        let fields: Vec<&str> = rec.iter().collect();
        let features = match self.schema.variant {
            FeatureVariant::Extended => Features::Extended(FlowRecord::from_fields(&fields[..n])?),
            FeatureVariant::Basic => Features::Basic(BasicRecord::from_fields(&fields[..n])?),
        };
        let label = if self.schema.labelled {
            Some(Label::from_columns(fields[n], fields[n + 1])?)
        } else {
            None
        };
        let dataset = self.schema.dataset.then(|| fields[n + 2].to_string());
        Ok(DatasetRow {
            features,
            label,
            dataset,
        })
    }
}

impl<R: Read> Iterator for FlowReader<R> {
    type Item = Result<DatasetRow>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            match self.inner.read_record(&mut self.record) {
                Ok(false) => return None,
                Ok(true) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            }
            let line = self.record.position().map(|p| p.line()).unwrap_or(0);
            match self.parse_row() {
                Ok(row) => return Some(Ok(row)),
                Err(message) => match self.mode {
                    ReadMode::Strict => {
                        self.failed = true;
                        return Some(Err(Error::parse(line, message)));
                    }
                    ReadMode::Lenient => self.skipped.push(RowError { line, message }),
                },
            }
        }
    }
}

/// A fully loaded CSV file.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub schema: CsvSchema,
    pub rows: Vec<DatasetRow>,
    pub skipped: Vec<RowError>,
}

pub fn read_flows(path: impl AsRef<Path>, mode: ReadMode) -> Result<CsvDataset> {
    let mut reader = FlowReader::open(path, mode)?;
    let rows = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok(CsvDataset {
        schema: reader.schema(),
        rows,
        skipped: reader.skipped,
    })
}
