//! Classifies flows with a custom port table loaded from a file.

use nidsflow::pipeline::{extract_files, ExtractConfig};
use nidsflow::synth::{CaptureWriter, FrameBuilder};
use nidsflow::L7Table;

const TABLE: &str = "\
# protocol,port,id
tcp,8080,7
udp,5353,8
tcp,6379,999
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let table = dir.path().join("ports.csv");
    std::fs::write(&table, TABLE)?;
    let pcap = dir.path().join("services.pcap");
    let mut w = CaptureWriter::create(&pcap)?;
    w.write_frame(0, &FrameBuilder::tcp([10, 0, 0, 1], [10, 0, 0, 2], 51000, 8080).build())?;
    w.write_frame(10, &FrameBuilder::udp([10, 0, 0, 1], [224, 0, 0, 251], 5353, 5353).payload_len(30).build())?;
    w.write_frame(20, &FrameBuilder::tcp([10, 0, 0, 3], [10, 0, 0, 2], 51001, 6379).build())?;
    w.write_frame(30, &FrameBuilder::tcp([10, 0, 0, 3], [10, 0, 0, 2], 51002, 80).build())?;
    w.flush()?;

    for (name, l7) in [("built-in", L7Table::default()), ("custom", L7Table::from_file(&table)?)] {
        let config = ExtractConfig { l7, ..ExtractConfig::default() };
        let ids: Vec<String> = extract_files(&[&pcap], &config)?
            .records()
            .map(|r| format!("{}={}", r.l4_dst_port, r.l7_proto))
            .collect();
        println!("{name:9} {}", ids.join(" "));
    }
    Ok(())
}
