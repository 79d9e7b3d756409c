//! Projects a labelled extended dataset to the 12 basic columns and prints
//! its distribution report.

use nidsflow::csv_io::{CsvSchema, DatasetRow, FlowWriter};
use nidsflow::dataset::{project_row, stats, BASIC_COLUMNS};
use nidsflow::pipeline::{extract_files, ExtractConfig};
use nidsflow::synth::{CaptureWriter, FrameBuilder};
use nidsflow::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let pcap = dir.path().join("toy_d.pcap");
    let mut w = CaptureWriter::create(&pcap)?;
    for i in 0..8u8 {
        w.write_frame(u64::from(i) * 250, &FrameBuilder::udp([10, 3, 0, i], [10, 3, 1, 1], 7000, 161).payload_len(60).build())?;
    }
    w.flush()?;

    let rows: Vec<DatasetRow> = extract_files(&[&pcap], &ExtractConfig::default())?
        .into_records()
        .into_iter()
        .enumerate()
        .map(|(i, r)| DatasetRow {
            label: Some(Label::from_category(if i % 4 == 0 { "Scanning" } else { "Benign" })),
            ..DatasetRow::unlabelled(r)
        })
        .collect();

    println!("basic columns: {}", BASIC_COLUMNS.join(","));
    let mut out = FlowWriter::new(std::io::stdout().lock(), CsvSchema::BASIC_LABELLED)?;
    for row in &rows {
        out.write_row(&project_row(row))?;
    }
    out.finish()?;
    print!("{}", stats(rows.iter().filter_map(|r| r.label.as_ref())));
    Ok(())
}
