//! Writes a small capture, extracts flows and prints them as CSV.
//!
//! Pass pcap paths to extract those instead.

use std::net::Ipv4Addr;

use nidsflow::csv_io::{CsvSchema, DatasetRow, FlowWriter};
use nidsflow::pipeline::{extract_files, ExtractConfig};
use nidsflow::synth::{tcp_flags, CaptureWriter, FrameBuilder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut paths: Vec<std::path::PathBuf> = std::env::args().skip(1).map(Into::into).collect();
    if paths.is_empty() {
        let path = dir.path().join("toy_a.pcap");
        let client = Ipv4Addr::new(192, 168, 0, 7);
        let server = Ipv4Addr::new(10, 20, 0, 1);
        let mut w = CaptureWriter::create(&path)?;
        w.write_frame(0, &FrameBuilder::tcp(client, server, 50123, 80).flags(tcp_flags::SYN).seq(10).build())?;
        w.write_frame(
            800,
            &FrameBuilder::tcp(server, client, 80, 50123).flags(tcp_flags::SYN | tcp_flags::ACK).seq(90).build(),
        )?;
        w.write_frame(
            2_000,
            &FrameBuilder::tcp(client, server, 50123, 80)
                .flags(tcp_flags::PSH | tcp_flags::ACK)
                .seq(11)
                .payload_len(420)
                .build(),
        )?;
        w.write_frame(40_000_000, &FrameBuilder::udp(client, server, 6000, 123).payload_len(48).build())?;
        w.flush()?;
        paths.push(path);
    }

    let extraction = extract_files(&paths, &ExtractConfig::default())?;
    eprintln!("{} packets decoded, {} flows", extraction.stats.decoded, extraction.flows.len());
    let mut out = FlowWriter::new(std::io::stdout().lock(), CsvSchema::EXTENDED)?;
    for flow in extraction.flows {
        out.write_row(&DatasetRow::unlabelled(flow.record))?;
    }
    out.finish()?;
    Ok(())
}
