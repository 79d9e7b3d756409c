//! Labels extracted flows from a ground-truth event list, with and without
//! event time windows.

use nidsflow::label::{LabelIndex, LabelOptions};
use nidsflow::pipeline::{extract_files, label_extracted, ExtractConfig};
use nidsflow::synth::{CaptureWriter, FrameBuilder};

const GROUND_TRUTH: &str = "\
src_ip,dst_ip,src_port,dst_port,protocol,attack,start_us,end_us
10.0.0.66,10.0.0.1,*,22,tcp,Brute Force,,
10.0.0.66,10.0.0.1,*,*,*,Reconnaissance,,
10.0.0.1,10.0.0.77,53,*,udp,DoS,5000000,6000000
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let pcap = dir.path().join("toy_c.pcap");
    let mut w = CaptureWriter::create(&pcap)?;
    for port in [22u16, 80, 443] {
        w.write_frame(u64::from(port) * 1_000, &FrameBuilder::tcp([10, 0, 0, 66], [10, 0, 0, 1], 40000, port).build())?;
    }
    w.write_frame(1_000_000, &FrameBuilder::udp([10, 0, 0, 77], [10, 0, 0, 1], 5353, 53).payload_len(40).build())?;
    w.write_frame(2_000_000, &FrameBuilder::udp([10, 0, 0, 8], [10, 0, 0, 1], 5353, 53).payload_len(40).build())?;
    w.flush()?;
    let gt = dir.path().join("events.csv");
    std::fs::write(&gt, GROUND_TRUTH)?;

    let flows = extract_files(&[&pcap], &ExtractConfig::default())?.flows;
    for time_windows in [false, true] {
        let index = LabelIndex::load(&gt)?.with_options(LabelOptions { bidirectional: true, time_windows });
        let (labelled, summary) = label_extracted(flows.clone(), &index);
        println!("time windows {}:", if time_windows { "on" } else { "off" });
        for flow in &labelled {
            let r = &flow.record;
            println!(
                "  {}:{} -> {}:{} {} {}",
                r.ipv4_src_addr, r.l4_src_port, r.ipv4_dst_addr, r.l4_dst_port, flow.label.class(), flow.label.attack()
            );
        }
        print!("{summary}");
    }
    Ok(())
}
