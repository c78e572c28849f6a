//! Annotate decoded packets from a device registry, so rendered text names
//! the actual equipment behind each object identifier.
//!
//! ```bash
//! cargo run --example annotate_devices
//! ```

use bacnet_explain::bacnet::decode_packet;
use bacnet_explain::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
use bacnet_explain::registry::{annotate, load_registry_from_str};
use bacnet_explain::{render_packet_text, samples};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "demo registry")?;
    println!("registry: {} devices\n", registry.len());

    let capture = read_capture(&samples::write_property_multiple_capture())?;
    let frames = filter_bacnet(capture.frames, BACNET_IP_PORT).frames;

    let mut packets = Vec::new();
    for frame in &frames {
        let packet = annotate(decode_packet(frame)?, &registry);
        for annotation in &packet.annotations {
            println!(
                "frame {}: matched {:?} -> {} ({})",
                frame.index, annotation.key, annotation.record.name, annotation.record.device_type
            );
        }
        packets.push(packet);
    }

    println!("\n{}", render_packet_text(&packets));
    Ok(())
}
