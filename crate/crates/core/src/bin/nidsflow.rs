use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nidsflow::csv_io::{read_flows, CsvSchema, DatasetRow, FeatureVariant, FlowReader, FlowWriter, ReadMode};
use nidsflow::dataset::{merge, project_row, CategoryMapping, DatasetManifest, DistributionReport};
use nidsflow::label::{FiveTuple, LabelIndex, LabelOptions, LabelSummary};
use nidsflow::pipeline::{extract_files, label_extracted, ExtractConfig};
use nidsflow::{Error, L7Table, Result};

#[derive(Parser)]
#[command(name = "nidsflow", version, about = "Flow features and labelled NIDS datasets from pcap captures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build flow records from one or more captures, read as one stream.
    Extract(ExtractArgs),
    /// Attach Label and Attack columns to a flow CSV.
    Label(LabelArgs),
    /// Concatenate labelled datasets with canonical categories and a Dataset column.
    Merge(MergeArgs),
    /// Print the class distribution of a labelled CSV.
    Stats(StatsArgs),
    /// Reduce a CSV to the 12 basic feature columns.
    Project(ProjectArgs),
}

#[derive(Args)]
struct ReadFlags {
    /// Skip malformed rows instead of failing on the first one.
    #[arg(long, conflicts_with = "strict")]
    lenient: bool,
    /// Fail on the first malformed row (the default).
    #[arg(long)]
    strict: bool,
}

impl ReadFlags {
    fn mode(&self) -> ReadMode {
        if self.lenient {
            ReadMode::Lenient
        } else {
            ReadMode::Strict
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(required = true)]
    pcaps: Vec<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Idle timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    idle_timeout: f64,
    /// Active timeout in seconds.
    #[arg(long, default_value_t = 120.0)]
    active_timeout: f64,
    /// Port table with `proto,port,id` lines.
    #[arg(long)]
    l7_table: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Label flows during extraction.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Honor event time windows (needs --ground-truth).
    #[arg(long, requires = "ground_truth")]
    time_windows: bool,
    /// Match events only in the orientation they are written.
    #[arg(long, requires = "ground_truth")]
    one_way: bool,
    #[arg(long, default_value = "extended")]
    variant: FeatureVariant,
}

#[derive(Args)]
struct LabelArgs {
    flows: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    one_way: bool,
    #[command(flatten)]
    read: ReadFlags,
}

#[derive(Args)]
struct MergeArgs {
    /// Inputs as `name=path`, or a path whose file stem becomes the name.
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Category mapping with `source,canonical` lines.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[command(flatten)]
    read: ReadFlags,
}

#[derive(Args)]
struct StatsArgs {
    input: PathBuf,
    #[command(flatten)]
    read: ReadFlags,
}

#[derive(Args)]
struct ProjectArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    read: ReadFlags,
}

fn seconds_to_us(secs: f64, flag: &str) -> Result<u64> {
    if !secs.is_finite() || secs <= 0.0 {
        return Err(Error::Config(format!("{flag} must be a positive number of seconds")));
    }
    Ok((secs * 1e6).round() as u64)
}

fn open_output(path: Option<&Path>, schema: CsvSchema) -> Result<FlowWriter<Box<dyn Write>>> {
    let out: Box<dyn Write> = match path {
        Some(p) if p != Path::new("-") => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?,
        )),
        _ => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    };
    FlowWriter::new(out, schema)
}

fn load_index(path: &Path, one_way: bool, time_windows: bool) -> Result<LabelIndex> {
    let index = LabelIndex::load(path)?.with_options(LabelOptions {
        bidirectional: !one_way,
        time_windows,
    });
    for skipped in index.skipped() {
        eprintln!("{}:{}: skipped event: {}", path.display(), skipped.line, skipped.message);
    }
    Ok(index)
}

fn extract(args: ExtractArgs) -> Result<()> {
    let mut config = ExtractConfig::default()
        .with_workers(args.workers)
        .with_timeouts(
            seconds_to_us(args.idle_timeout, "--idle-timeout")?,
            seconds_to_us(args.active_timeout, "--active-timeout")?,
        );
    if let Some(path) = &args.l7_table {
        config.l7 = L7Table::from_file(path)?;
    }
    let extraction = extract_files(&args.pcaps, &config)?;
    for (path, packets) in &extraction.truncated {
        eprintln!("warning: {} is truncated after {packets} records", path.display());
    }
    let s = &extraction.stats;
    eprintln!(
        "frames {} decoded {} skipped {} (ipv6 {}, non-ipv4 {}, stacked vlan {}, malformed {}), flows {}",
        s.frames,
        s.decoded,
        s.skipped(),
        s.ipv6,
        s.non_ipv4,
        s.stacked_vlan,
        s.malformed,
        extraction.flows.len()
    );

    let labelled = args.ground_truth.is_some();
    let schema = CsvSchema::new(args.variant, labelled, false);
    let mut writer = open_output(args.output.as_deref(), schema)?;
    let shape = |row: DatasetRow| match args.variant {
        FeatureVariant::Extended => row,
        FeatureVariant::Basic => project_row(&row),
    };
    if let Some(gt) = &args.ground_truth {
        let index = load_index(gt, args.one_way, args.time_windows)?;
        let (flows, summary) = label_extracted(extraction.flows, &index);
        for flow in flows {
            writer.write_row(&shape(flow.into()))?;
        }
        eprint!("{summary}");
    } else {
        for flow in extraction.flows {
            writer.write_row(&shape(DatasetRow::unlabelled(flow.record)))?;
        }
    }
    writer.finish()?;
    Ok(())
}

fn label(args: LabelArgs) -> Result<()> {
    let index = load_index(&args.ground_truth, args.one_way, false)?;
    let mut reader = FlowReader::open(&args.flows, args.read.mode())?;
    let input = reader.schema();
    if input.labelled {
        return Err(Error::SchemaMismatch(format!(
            "{} is already labelled",
            args.flows.display()
        )));
    }
    let mut writer = open_output(args.output.as_deref(), CsvSchema::new(input.variant, true, false))?;
    let mut summary = LabelSummary {
        skipped_events: index.skipped().to_vec(),
        ..Default::default()
    };
    for row in reader.by_ref() {
        let mut row = row?;
        let b = row.features.basic();
        let tuple = FiveTuple {
            src_ip: b.ipv4_src_addr,
            dst_ip: b.ipv4_dst_addr,
            src_port: b.l4_src_port,
            dst_port: b.l4_dst_port,
            protocol: b.protocol,
        };
        let label = index.label(&tuple, None);
        summary.add(&label);
        row.label = Some(label);
        writer.write_row(&row)?;
    }
    writer.finish()?;
    report_skipped(&args.flows, reader.skipped().len());
    eprint!("{summary}");
    Ok(())
}

fn report_skipped(path: &Path, count: usize) {
    if count > 0 {
        eprintln!("{}: skipped {count} malformed rows", path.display());
    }
}

fn parse_input(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (name, path)
        }
    }
}

fn merge_cmd(args: MergeArgs) -> Result<()> {
    let mapping = match &args.mapping {
        Some(path) => CategoryMapping::from_file(path)?,
        None => CategoryMapping::default(),
    };
    let mode = args.read.mode();
    let manifests = args
        .inputs
        .iter()
        .map(|arg| {
            let (name, path) = parse_input(arg);
            DatasetManifest::scan(name, path, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    let schema = manifests
        .first()
        .map(|m| m.schema.with_dataset())
        .ok_or_else(|| Error::Config("no inputs".into()))?;
    let mut writer = open_output(args.output.as_deref(), schema)?;
    let summary = merge(&manifests, &mapping, &mut writer, mode)?;
    writer.finish()?;
    for (name, rows) in &summary.per_dataset {
        eprintln!("{name}: {rows} rows");
    }
    eprint!("{}", summary.report);
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let data = read_flows(&args.input, args.read.mode())?;
    if !data.schema.labelled {
        return Err(Error::SchemaMismatch(format!(
            "{} has no Label/Attack columns",
            args.input.display()
        )));
    }
    let mut report = DistributionReport::default();
    for row in &data.rows {
        if let Some(label) = &row.label {
            report.add(label);
        }
    }
    report_skipped(&args.input, data.skipped.len());
    print!("{report}");
    Ok(())
}

fn project(args: ProjectArgs) -> Result<()> {
    let mut reader = FlowReader::open(&args.input, args.read.mode())?;
    let schema = reader.schema().with_variant(FeatureVariant::Basic);
    let mut writer = open_output(args.output.as_deref(), schema)?;
    for row in reader.by_ref() {
        writer.write_row(&project_row(&row?))?;
    }
    writer.finish()?;
    report_skipped(&args.input, reader.skipped().len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Label(a) => label(a),
        Command::Merge(a) => merge_cmd(a),
        Command::Stats(a) => stats(a),
        Command::Project(a) => project(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
