//! Decode a BACnet/IP capture and print the canonical packet text.
//!
//! ```bash
//! cargo run --example decode_capture            # bundled two-frame demo
//! cargo run --example decode_capture -- my.pcap # your own capture
//! ```

use bacnet_explain::bacnet::decode_packet;
use bacnet_explain::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
use bacnet_explain::{render_packet_text, samples};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => samples::write_property_error_capture(),
    };

    let capture = read_capture(&bytes)?;
    println!(
        "capture: {} UDP frames ({})",
        capture.frames.len(),
        capture.skipped
    );

    let filtered = filter_bacnet(capture.frames, BACNET_IP_PORT);
    println!(
        "bacnet: {} frames kept, {} dropped\n",
        filtered.frames.len(),
        filtered.dropped
    );

    let mut packets = Vec::new();
    for frame in &filtered.frames {
        match decode_packet(frame) {
            Ok(packet) => packets.push(packet),
            Err(e) => eprintln!("frame {}: {e}", frame.index),
        }
    }

    print!("{}", render_packet_text(&packets));
    Ok(())
}
