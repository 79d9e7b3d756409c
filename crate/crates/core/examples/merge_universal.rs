//! Merges labelled toy datasets with the default category mapping and
//! prints the class distribution of the result.

use nidsflow::csv_io::{read_flows, write_flows, CsvSchema, DatasetRow, ReadMode};
use nidsflow::dataset::{merge_to_path, CategoryMapping, DatasetManifest};
use nidsflow::pipeline::{extract_files, ExtractConfig};
use nidsflow::synth::{CaptureWriter, FrameBuilder};
use nidsflow::Label;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let pcap = dir.path().join("hosts.pcap");
    let mut w = CaptureWriter::create(&pcap)?;
    for i in 0..12u8 {
        w.write_frame(u64::from(i) * 1_000, &FrameBuilder::tcp([10, 1, 0, i], [10, 2, 0, 1], 30000, 80).build())?;
    }
    w.flush()?;
    let records: Vec<_> = extract_files(&[&pcap], &ExtractConfig::default())?.into_records();

    let corpora = [
        ("toy_a", ["Benign", "Benign", "Exploits", "Fuzzers", "Benign", "Generic"]),
        ("toy_b", ["Benign", "DoS attacks-Hulk", "SSH-Bruteforce", "DDoS attack-HOIC", "SQL Injection", "Benign"]),
    ];
    let mut manifests = Vec::new();
    for (k, (name, classes)) in corpora.iter().enumerate() {
        let rows: Vec<DatasetRow> = classes
            .iter()
            .zip(&records[k * 6..])
            .map(|(class, r)| DatasetRow {
                label: Some(Label::from_category(class)),
                ..DatasetRow::unlabelled(r.clone())
            })
            .collect();
        let path = dir.path().join(format!("{name}.csv"));
        write_flows(&path, CsvSchema::EXTENDED_LABELLED, &rows)?;
        manifests.push(DatasetManifest::scan(*name, path, ReadMode::Strict)?);
    }

    let out = dir.path().join("merged.csv");
    let summary = merge_to_path(&manifests, &CategoryMapping::default(), &out, ReadMode::Strict)?;
    for row in read_flows(&out, ReadMode::Strict)?.rows {
        let label = row.label.unwrap();
        println!("{:6} {:>2} {}", row.dataset.unwrap(), label.class(), label.attack());
    }
    print!("{}", summary.report);
    Ok(())
}
