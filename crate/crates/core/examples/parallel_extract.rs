//! Extracts a generated capture with one and several workers and checks
//! that both produce the same flows.

use std::time::Instant;

use nidsflow::pipeline::{extract_files, ExtractConfig};
use nidsflow::synth::{tcp_flags, CaptureWriter, FrameBuilder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let packets: u32 = std::env::args().nth(1).map_or(Ok(200_000), |s| s.parse())?;
    let dir = tempfile::tempdir()?;
    let pcap = dir.path().join("bulk.pcap");
    let mut w = CaptureWriter::create(&pcap)?;
    let mut state = 0x2545_f491u32;
    for i in 0..packets {
        state ^= state << 13;
        state ^= state >> 17;
        state ^= state << 5;
        let host = (state % 2000) as u16;
        let client = [10, 9, (host >> 8) as u8, host as u8];
        let frame = if state % 5 == 0 {
            FrameBuilder::udp(client, [10, 8, 0, 1], 20000 + host, 53).payload_len(40).build()
        } else {
            FrameBuilder::tcp(client, [10, 8, 0, 2], 20000 + host, 443)
                .flags(tcp_flags::ACK)
                .seq(i)
                .payload_len((state % 1400) as usize)
                .build()
        };
        w.write_frame(u64::from(i) * 700, &frame)?;
    }
    w.flush()?;
    drop(w);

    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let mut outputs = Vec::new();
    for workers in [1, threads] {
        let started = Instant::now();
        let out = extract_files(&[&pcap], &ExtractConfig::default().with_workers(workers))?;
        println!(
            "workers={workers:<3} flows={} elapsed={:.2?}",
            out.flows.len(),
            started.elapsed()
        );
        outputs.push(out.flows);
    }
    println!("identical output: {}", outputs[0] == outputs[1]);
    Ok(())
}
