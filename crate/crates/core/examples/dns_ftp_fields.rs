//! Application fields: DNS query id, type and answer TTL, FTP reply codes
//! and the port-based L7 id.

use nidsflow::pipeline::{extract_files, ExtractConfig};
use nidsflow::synth::{dns, tcp_flags, CaptureWriter, FrameBuilder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("toy_b.pcap");
    let host = [172, 16, 5, 5];
    let resolver = [172, 16, 0, 53];
    let ftp = [172, 16, 0, 21];
    let mut w = CaptureWriter::create(&path)?;
    w.write_frame(0, &FrameBuilder::udp(host, resolver, 41000, 53).payload(dns::query(0xbeef, "toy.example", dns::TYPE_A)).build())?;
    let answers = [dns::Answer::cname_to_question(60), dns::Answer::a(3600, [192, 0, 2, 1])];
    w.write_frame(
        1_200,
        &FrameBuilder::udp(resolver, host, 53, 41000)
            .payload(dns::response(0xbeef, "toy.example", dns::TYPE_A, &answers))
            .build(),
    )?;
    let replies: [&[u8]; 3] = [b"220 ready\r\n", b"331 password please\r\n", b"530 Login incorrect.\r\n"];
    for (i, text) in replies.iter().enumerate() {
        let frame = FrameBuilder::tcp(ftp, host, 21, 52000)
            .flags(tcp_flags::PSH | tcp_flags::ACK)
            .seq(1 + 100 * i as u32)
            .payload(text.to_vec())
            .build();
        w.write_frame(10_000 + 5_000 * i as u64, &frame)?;
    }
    w.flush()?;

    for flow in extract_files(&[&path], &ExtractConfig::default())?.flows {
        let r = &flow.record;
        println!(
            "{} l7={} dns_id={:#x} dns_type={} dns_ttl={} ftp_code={}",
            flow.key, r.l7_proto, r.dns_query_id, r.dns_query_type, r.dns_ttl_answer, r.ftp_command_ret_code
        );
    }
    Ok(())
}
