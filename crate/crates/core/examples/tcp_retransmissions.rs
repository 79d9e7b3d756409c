//! Retransmission counters on a stream with a duplicate and a reordered
//! segment, including a sequence number wrap.

use nidsflow::ingest::{decode_packet, Decoded, LINKTYPE_ETHERNET};
use nidsflow::pipeline::{extract_packets, ExtractConfig};
use nidsflow::synth::{tcp_flags, FrameBuilder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = [10, 0, 0, 1];
    let s = [10, 0, 0, 2];
    let base = u32::MAX - 99;
    let segments = [(base, 100), (0, 100), (0, 100), (200, 100), (100, 100), (300, 50)];
    let mut packets = Vec::new();
    for (i, (seq, len)) in segments.iter().enumerate() {
        let frame = FrameBuilder::tcp(c, s, 43000, 443)
            .flags(tcp_flags::PSH | tcp_flags::ACK)
            .seq(*seq)
            .payload_len(*len)
            .build();
        if let Decoded::Packet(p) = decode_packet(&frame, i as u64 * 10_000, LINKTYPE_ETHERNET) {
            packets.push(p);
        }
    }
    let flows = extract_packets(packets, &ExtractConfig::default())?;
    let r = &flows[0].record;
    println!("segments:                {}", r.in_pkts);
    println!("retransmitted packets:   {}", r.retransmitted_in_pkts);
    println!("retransmitted bytes:     {}", r.retransmitted_in_bytes);
    Ok(())
}
