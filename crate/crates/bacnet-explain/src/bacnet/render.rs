//! Canonical plain-text rendering of decoded packets.
//!
//! The layout is the one the rest of the pipeline (and its prompts) depend
//! on: a `Packet:` header, then per frame a `Frame N` line, the APDU type,
//! and one indented line per decoded element. Rendering is a pure function
//! of its input, so equal packet lists produce byte-identical text.

use super::names;
use super::tags::{hex_string, PrimitiveValue};
use super::{ApduElement, DecodedPacket};
use crate::registry::AnnotationKey;

/// Rendering switches. The link header repeats addressing data that the
/// appendix layout leaves out, so it is off unless asked for.
#[derive(Debug, Clone, Copy, Default)]
pub struct RenderOptions {
    /// Emit per-frame `src`/`dst` lines with IP:port and OUI.
    pub include_link_header: bool,
}

/// Render the canonical text for a packet list with default options.
pub fn render_packet_text(packets: &[DecodedPacket]) -> String {
    render_packet_text_with(packets, RenderOptions::default())
}

/// Render the canonical text, with options.
pub fn render_packet_text_with(packets: &[DecodedPacket], options: RenderOptions) -> String {
    let mut out = String::from("Packet:\n");
    for (position, packet) in packets.iter().enumerate() {
        if position > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Frame {}\n", position + 1));
        if options.include_link_header {
            let f = &packet.frame;
            out.push_str(&format!(
                "  src :{}:{} (oui {})\n",
                f.src_ip_string(),
                f.src_port,
                oui_string(f.src_oui())
            ));
            out.push_str(&format!(
                "  dst :{}:{} (oui {})\n",
                f.dst_ip_string(),
                f.dst_port,
                oui_string(f.dst_oui())
            ));
        }
        out.push_str(&format!("  apdu_type :{}\n", packet.apdu.pdu_type.label()));
        out.push_str("  apdu :\n");
        for line in apdu_lines(packet, true) {
            out.push_str("    ");
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

/// The APDU portion only, one line per element, used as the retrieval
/// query. Device annotations deliberately stay out of it, so retrieval
/// sees only what was on the wire.
pub(super) fn render_apdu_section(packet: &DecodedPacket) -> String {
    apdu_lines(packet, false).join("\n")
}

fn oui_string(oui: [u8; 3]) -> String {
    format!("{:02X}:{:02X}:{:02X}", oui[0], oui[1], oui[2])
}

fn apdu_lines(packet: &DecodedPacket, with_annotations: bool) -> Vec<String> {
    let mut lines = Vec::new();
    if let Some(service) = packet.apdu.service_choice {
        lines.push(format!(
            "Service Choice: {} ({})",
            service.display_name(),
            service.code
        ));
    }
    if packet.apdu.segmented {
        lines.push("Segmented: true (not reassembled)".to_string());
    }
    for element in &packet.apdu.elements {
        lines.push(element_line(element, packet, with_annotations));
    }
    if let Some(suffix) = &packet.apdu.undecoded {
        lines.push(format!("Undecoded: {}", hex_string(suffix)));
    }
    lines
}

fn element_line(element: &ApduElement, packet: &DecodedPacket, with_annotations: bool) -> String {
    match element {
        ApduElement::ObjectId(object) => {
            let mut line = format!("ObjectIdentifier: {}", object);
            if with_annotations {
                let hit = packet.annotations.iter().find(|a| match &a.key {
                    AnnotationKey::Object(key) => key == object,
                    AnnotationKey::SourceIp(_) => false,
                });
                if let Some(annotation) = hit {
                    line.push_str(&format!(
                        ", Name :{}, Type :{}",
                        annotation.record.name, annotation.record.device_type
                    ));
                }
            }
            line
        }
        ApduElement::PropertyId(code) => format!(
            "Property Identifier: {} ({})",
            names::property_name(*code).unwrap_or("unknown"),
            code
        ),
        ApduElement::ArrayIndex(index) => format!("Array Index: (Unsigned) {index}"),
        ApduElement::Value { property, value } => {
            let label = property
                .and_then(names::property_name)
                .map(title_case)
                .unwrap_or_else(|| "Value".to_string());
            value_line(&label, value)
        }
        ApduElement::Priority(priority) => format!("Priority: (Unsigned) {priority}"),
        ApduElement::ErrorClass(code) => format!(
            "Error Class: {} ({})",
            names::error_class_name(*code).unwrap_or("unknown"),
            code
        ),
        ApduElement::ErrorCode(code) => format!(
            "Error Code: {} ({})",
            names::error_code_name(*code).unwrap_or("unknown"),
            code
        ),
        ApduElement::RejectReason(code) => format!(
            "Reject Reason: {} ({})",
            reject_reason_name(*code),
            code
        ),
        ApduElement::AbortReason(code) => format!(
            "Abort Reason: {} ({})",
            abort_reason_name(*code),
            code
        ),
        ApduElement::Primitive(value) => value_line("Value", value),
        ApduElement::ContextRaw { tag, bytes } => {
            format!("Context Tag {}: {}", tag, hex_string(bytes))
        }
    }
}

fn value_line(label: &str, value: &PrimitiveValue) -> String {
    match value {
        PrimitiveValue::Null => format!("{label}: NULL"),
        PrimitiveValue::Boolean(b) => {
            format!("{label} (boolean): {}", if *b { "TRUE" } else { "FALSE" })
        }
        PrimitiveValue::Unsigned(v) => format!("{label} (unsigned): {v}"),
        PrimitiveValue::Signed(v) => format!("{label} (signed): {v}"),
        PrimitiveValue::Real(v) => format!("{label} (real): {v}"),
        PrimitiveValue::CharacterString(s) => format!("{label} (character-string): {s}"),
        PrimitiveValue::Enumerated(v) => format!("{label} (enumerated): {v}"),
        PrimitiveValue::ObjectId(object) => format!("{label} (object-identifier): {object}"),
        PrimitiveValue::Opaque { tag, bytes } => {
            format!("{label} (tag {tag}): {}", hex_string(bytes))
        }
    }
}

/// `present-value` becomes `Present Value`.
fn title_case(name: &str) -> String {
    name.split('-')
        .map(|word| {
            let mut chars = word.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn reject_reason_name(code: u8) -> &'static str {
    match code {
        0 => "other",
        1 => "buffer-overflow",
        2 => "inconsistent-parameters",
        3 => "invalid-parameter-data-type",
        4 => "invalid-tag",
        5 => "missing-required-parameter",
        6 => "parameter-out-of-range",
        7 => "too-many-arguments",
        8 => "undefined-enumeration",
        9 => "unrecognized-service",
        _ => "unknown",
    }
}

fn abort_reason_name(code: u8) -> &'static str {
    match code {
        0 => "other",
        1 => "buffer-overflow",
        2 => "invalid-apdu-in-this-state",
        3 => "preempted-by-higher-priority-task",
        4 => "segmentation-not-supported",
        5 => "security-error",
        6 => "insufficient-security",
        _ => "unknown",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
    use crate::registry::{load_registry_from_str, annotate};
    use crate::samples;

    fn decoded(pcap: &[u8]) -> Vec<DecodedPacket> {
        let capture = read_capture(pcap).unwrap();
        filter_bacnet(capture.frames, BACNET_IP_PORT)
            .frames
            .iter()
            .map(|f| super::super::decode_packet(f).unwrap())
            .collect()
    }

    #[test]
    fn renders_the_annotated_write_property_multiple_lines() {
        let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "inline").unwrap();
        let packets: Vec<_> = decoded(&samples::write_property_multiple_capture())
            .into_iter()
            .map(|p| annotate(p, &registry))
            .collect();
        let text = render_packet_text(&packets);
        assert!(text.starts_with("Packet:\nFrame 1\n  apdu_type :Confirmed-REQ\n  apdu :\n"));
        assert!(text.contains("Service Choice: writePropertyMultiple (16)"));
        assert!(text.contains(
            "ObjectIdentifier: analog-output, 28, Name :AC-100 Server room temperature setting, Type :AirConditioning"
        ));
        assert!(text.contains("Property Identifier: present-value (85)"));
        assert!(text.contains("Present Value (real): 100"));
        assert!(text.contains("Priority: (Unsigned) 1"));
    }

    #[test]
    fn renders_error_class_and_code_lines() {
        let packets = decoded(&samples::write_property_error_capture());
        let text = render_packet_text(&packets);
        assert!(text.contains("Frame 1"));
        assert!(text.contains("Frame 2"));
        assert!(text.contains("apdu_type :Error"));
        assert!(text.contains("Service Choice: writeProperty (15)"));
        assert!(text.contains("Property Identifier: object-list (76)"));
        assert!(text.contains("Object List: NULL"));
        assert!(text.contains("Error Class: property (2)"));
        assert!(text.contains("Error Code: write-access-denied (40)"));
    }

    #[test]
    fn empty_packet_list_renders_header_only() {
        assert_eq!(render_packet_text(&[]), "Packet:\n");
    }

    #[test]
    fn rendering_is_pure() {
        let packets = decoded(&samples::write_property_error_capture());
        assert_eq!(render_packet_text(&packets), render_packet_text(&packets));
    }

    #[test]
    fn link_header_is_opt_in() {
        let packets = decoded(&samples::write_property_multiple_capture());
        let plain = render_packet_text(&packets);
        assert!(!plain.contains("src :"));
        let with_header = render_packet_text_with(
            &packets,
            RenderOptions { include_link_header: true },
        );
        assert!(with_header.contains("src :"));
        assert!(with_header.contains("dst :"));
        assert!(with_header.contains("oui "));
    }

    #[test]
    fn apdu_text_leaves_annotations_out() {
        let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "inline").unwrap();
        let packets: Vec<_> = decoded(&samples::write_property_multiple_capture())
            .into_iter()
            .map(|p| annotate(p, &registry))
            .collect();
        let query = packets[0].apdu_text();
        assert!(query.contains("Service Choice: writePropertyMultiple (16)"));
        assert!(query.contains("ObjectIdentifier: analog-output, 28"));
        assert!(!query.contains("Name :"));
    }

    #[test]
    fn title_case_splits_on_hyphens() {
        assert_eq!(title_case("present-value"), "Present Value");
        assert_eq!(title_case("object-list"), "Object List");
    }
}
