//! Synthetic demo data: captures, a device registry, a corpus document, and
//! a ratings file.
//!
//! Everything here is generated byte-for-byte deterministically so the
//! examples run without external files and tests can pin exact outputs. The
//! capture builders write pcap/Ethernet/IPv4/UDP and BACnet bytes directly
//! from the wire layouts; they share no code with the decoder they exercise.

use crate::capture::RawFrame;

// ---------------------------------------------------------------------------
// pcap and Ethernet/IPv4/UDP writers
// ---------------------------------------------------------------------------

/// Build a classic little-endian pcap file from `(ts_sec, ts_usec, record)`
/// triples. Link type is Ethernet.
pub fn pcap_file(records: &[(u32, u32, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&0xA1B2_C3D4u32.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&65535u32.to_le_bytes());
    out.extend_from_slice(&1u32.to_le_bytes());
    for (sec, usec, data) in records {
        out.extend_from_slice(&sec.to_le_bytes());
        out.extend_from_slice(&usec.to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
    }
    out
}

/// Same capture with the byte-swapped magic (big-endian writer).
pub fn pcap_file_big_endian(records: &[(u32, u32, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&0xA1B2_C3D4u32.to_be_bytes());
    out.extend_from_slice(&2u16.to_be_bytes());
    out.extend_from_slice(&4u16.to_be_bytes());
    out.extend_from_slice(&0i32.to_be_bytes());
    out.extend_from_slice(&0u32.to_be_bytes());
    out.extend_from_slice(&65535u32.to_be_bytes());
    out.extend_from_slice(&1u32.to_be_bytes());
    for (sec, usec, data) in records {
        out.extend_from_slice(&sec.to_be_bytes());
        out.extend_from_slice(&usec.to_be_bytes());
        out.extend_from_slice(&(data.len() as u32).to_be_bytes());
        out.extend_from_slice(&(data.len() as u32).to_be_bytes());
        out.extend_from_slice(data);
    }
    out
}

/// Wrap a UDP payload in Ethernet + IPv4 + UDP headers.
#[allow(clippy::too_many_arguments)]
pub fn ethernet_udp_record(
    src_mac: [u8; 6],
    dst_mac: [u8; 6],
    src_ip: [u8; 4],
    dst_ip: [u8; 4],
    src_port: u16,
    dst_port: u16,
    payload: &[u8],
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&dst_mac);
    out.extend_from_slice(&src_mac);
    out.extend_from_slice(&0x0800u16.to_be_bytes());

    let total_len = 20 + 8 + payload.len();
    let mut ip = vec![
        0x45,
        0x00,
        (total_len >> 8) as u8,
        (total_len & 0xFF) as u8,
        0x00,
        0x01, // identification
        0x00,
        0x00, // flags/fragment
        0x40, // ttl
        17,   // UDP
        0x00,
        0x00, // checksum placeholder
    ];
    ip.extend_from_slice(&src_ip);
    ip.extend_from_slice(&dst_ip);
    let checksum = ipv4_checksum(&ip);
    ip[10] = (checksum >> 8) as u8;
    ip[11] = (checksum & 0xFF) as u8;
    out.extend_from_slice(&ip);

    out.extend_from_slice(&src_port.to_be_bytes());
    out.extend_from_slice(&dst_port.to_be_bytes());
    out.extend_from_slice(&((8 + payload.len()) as u16).to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes()); // checksum 0: not computed
    out.extend_from_slice(payload);
    out
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum = 0u32;
    for pair in header.chunks(2) {
        let word = u32::from(pair[0]) << 8 | u32::from(*pair.get(1).unwrap_or(&0));
        sum += word;
    }
    while sum >> 16 != 0 {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// A frame with the given BACnet/IP payload and fixed addressing, for tests
/// that do not need a full capture file.
pub fn frame_with_payload(payload: Vec<u8>) -> RawFrame {
    RawFrame {
        index: 0,
        ts_sec: 1_700_000_000,
        ts_usec: 0,
        src_mac: CLIENT_MAC,
        dst_mac: SERVER_MAC,
        src_ip: CLIENT_IP,
        dst_ip: SERVER_IP,
        src_port: 47808,
        dst_port: 47808,
        payload,
    }
}

const CLIENT_MAC: [u8; 6] = [0x00, 0x1A, 0x2B, 0x01, 0x02, 0x03];
const SERVER_MAC: [u8; 6] = [0x00, 0x0D, 0x0E, 0x0A, 0x0B, 0x0C];
const CLIENT_IP: [u8; 4] = [192, 168, 10, 2];
const SERVER_IP: [u8; 4] = [192, 168, 10, 20];

// ---------------------------------------------------------------------------
// BACnet byte builders (writer side, independent of the decoder)
// ---------------------------------------------------------------------------

/// BVLC original-unicast wrapper around an NPDU-less APDU, expecting-reply
/// control when the APDU is a confirmed request.
fn bvlc(npdu_control: u8, apdu: &[u8]) -> Vec<u8> {
    let total = 4 + 2 + apdu.len();
    let mut out = vec![0x81, 0x0A, (total >> 8) as u8, (total & 0xFF) as u8];
    out.push(0x01);
    out.push(npdu_control);
    out.extend_from_slice(apdu);
    out
}

fn ctx(tag: u8, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    if data.len() < 5 {
        out.push((tag << 4) | 0x08 | data.len() as u8);
    } else {
        out.push((tag << 4) | 0x08 | 0x05);
        out.push(data.len() as u8);
    }
    out.extend_from_slice(data);
    out
}

fn ctx_object_id(tag: u8, type_code: u16, instance: u32) -> Vec<u8> {
    let encoded = (u32::from(type_code) << 22) | instance;
    ctx(tag, &encoded.to_be_bytes())
}

fn ctx_unsigned(tag: u8, value: u64) -> Vec<u8> {
    ctx(tag, &minimal_be(value))
}

fn minimal_be(value: u64) -> Vec<u8> {
    let bytes = value.to_be_bytes();
    let start = bytes.iter().position(|b| *b != 0).unwrap_or(7);
    bytes[start..].to_vec()
}

fn opening(tag: u8) -> Vec<u8> {
    vec![(tag << 4) | 0x08 | 0x06]
}

fn closing(tag: u8) -> Vec<u8> {
    vec![(tag << 4) | 0x08 | 0x07]
}

fn app_null() -> Vec<u8> {
    vec![0x00]
}

fn app_real(value: f32) -> Vec<u8> {
    let mut out = vec![0x44];
    out.extend_from_slice(&value.to_be_bytes());
    out
}

fn app_unsigned(value: u64) -> Vec<u8> {
    let data = minimal_be(value);
    let mut out = vec![(2 << 4) | data.len() as u8];
    out.extend_from_slice(&data);
    out
}

fn app_enumerated(value: u32) -> Vec<u8> {
    let data = minimal_be(u64::from(value));
    let mut out = vec![(9 << 4) | data.len() as u8];
    out.extend_from_slice(&data);
    out
}

fn app_object_id(type_code: u16, instance: u32) -> Vec<u8> {
    let encoded = (u32::from(type_code) << 22) | instance;
    let mut out = vec![(12 << 4) | 4];
    out.extend_from_slice(&encoded.to_be_bytes());
    out
}

fn app_character_string(text: &str) -> Vec<u8> {
    let mut content = vec![0x00];
    content.extend_from_slice(text.as_bytes());
    let mut out = Vec::new();
    if content.len() < 5 {
        out.push((7 << 4) | content.len() as u8);
    } else {
        out.push((7 << 4) | 5);
        out.push(content.len() as u8);
    }
    out.extend_from_slice(&content);
    out
}

fn confirmed_request(invoke_id: u8, service: u8, params: &[Vec<u8>]) -> Vec<u8> {
    let mut apdu = vec![0x00, 0x04, invoke_id, service];
    for p in params {
        apdu.extend_from_slice(p);
    }
    apdu
}

fn unconfirmed_request(service: u8, params: &[Vec<u8>]) -> Vec<u8> {
    let mut apdu = vec![0x10, service];
    for p in params {
        apdu.extend_from_slice(p);
    }
    apdu
}

fn simple_ack(invoke_id: u8, service: u8) -> Vec<u8> {
    vec![0x20, invoke_id, service]
}

fn complex_ack(invoke_id: u8, service: u8, params: &[Vec<u8>]) -> Vec<u8> {
    let mut apdu = vec![0x30, invoke_id, service];
    for p in params {
        apdu.extend_from_slice(p);
    }
    apdu
}

fn error_pdu(invoke_id: u8, service: u8, class: u32, code: u32) -> Vec<u8> {
    let mut apdu = vec![0x50, invoke_id, service];
    apdu.extend_from_slice(&app_enumerated(class));
    apdu.extend_from_slice(&app_enumerated(code));
    apdu
}

fn reject_pdu(invoke_id: u8, reason: u8) -> Vec<u8> {
    vec![0x60, invoke_id, reason]
}

fn client_to_server(payload: &[u8]) -> Vec<u8> {
    ethernet_udp_record(CLIENT_MAC, SERVER_MAC, CLIENT_IP, SERVER_IP, 47808, 47808, payload)
}

fn server_to_client(payload: &[u8]) -> Vec<u8> {
    ethernet_udp_record(SERVER_MAC, CLIENT_MAC, SERVER_IP, CLIENT_IP, 47808, 47808, payload)
}

// ---------------------------------------------------------------------------
// Ready-made captures
// ---------------------------------------------------------------------------

/// One frame: a writePropertyMultiple request setting present-value of
/// analog-output 28 to 100.0 at priority 1.
pub fn write_property_multiple_capture() -> Vec<u8> {
    let apdu = confirmed_request(
        1,
        16,
        &[
            ctx_object_id(0, 1, 28),
            opening(1),
            ctx_unsigned(0, 85),
            opening(2),
            app_real(100.0),
            closing(2),
            ctx_unsigned(3, 1),
            closing(1),
        ],
    );
    let payload = bvlc(0x04, &apdu);
    let record = client_to_server(&payload);
    pcap_file(&[(1_700_000_000, 0, &record)])
}

/// Two frames: a writeProperty request that tries to clear device 126's
/// object-list, answered by an Error with class property (2) and code
/// write-access-denied (40).
pub fn write_property_error_capture() -> Vec<u8> {
    let request = bvlc(
        0x04,
        &confirmed_request(
            2,
            15,
            &[
                ctx_object_id(0, 8, 126),
                ctx_unsigned(1, 76),
                opening(3),
                app_null(),
                closing(3),
            ],
        ),
    );
    let error = bvlc(0x00, &error_pdu(2, 15, 2, 40));
    let r1 = client_to_server(&request);
    let r2 = server_to_client(&error);
    pcap_file(&[(1_700_000_000, 0, &r1), (1_700_000_000, 512, &r2)])
}

/// A 19-frame capture exercising the common traffic mix: property reads and
/// writes with their acknowledgements, discovery, a COV subscription and
/// notification, a reject, and a denied write.
pub fn evaluation_capture() -> Vec<u8> {
    let frames: Vec<Vec<u8>> = vec![
        // 1-4: read back the zone temperature and its units.
        client_to_server(&bvlc(0x04, &confirmed_request(10, 12, &[
            ctx_object_id(0, 0, 3),
            ctx_unsigned(1, 85),
        ]))),
        server_to_client(&bvlc(0x00, &complex_ack(10, 12, &[
            ctx_object_id(0, 0, 3),
            ctx_unsigned(1, 85),
            opening(3),
            app_real(21.5),
            closing(3),
        ]))),
        client_to_server(&bvlc(0x04, &confirmed_request(11, 12, &[
            ctx_object_id(0, 0, 3),
            ctx_unsigned(1, 117),
        ]))),
        server_to_client(&bvlc(0x00, &complex_ack(11, 12, &[
            ctx_object_id(0, 0, 3),
            ctx_unsigned(1, 117),
            opening(3),
            app_enumerated(62),
            closing(3),
        ]))),
        // 5-6: set the air-conditioning setpoint.
        client_to_server(&bvlc(0x04, &confirmed_request(12, 15, &[
            ctx_object_id(0, 1, 28),
            ctx_unsigned(1, 85),
            opening(3),
            app_real(100.0),
            closing(3),
            ctx_unsigned(4, 1),
        ]))),
        server_to_client(&bvlc(0x00, &simple_ack(12, 15))),
        // 7-8: batch write of the same setpoint at a lower priority.
        client_to_server(&bvlc(0x04, &confirmed_request(13, 16, &[
            ctx_object_id(0, 1, 28),
            opening(1),
            ctx_unsigned(0, 85),
            opening(2),
            app_real(22.0),
            closing(2),
            ctx_unsigned(3, 8),
            closing(1),
        ]))),
        server_to_client(&bvlc(0x00, &simple_ack(13, 16))),
        // 9-12: discovery round plus a rejected request.
        client_to_server(&bvlc(0x04, &unconfirmed_request(8, &[]))),
        server_to_client(&bvlc(0x00, &unconfirmed_request(0, &[
            app_object_id(8, 126),
            app_unsigned(480),
            app_enumerated(3),
            app_unsigned(15),
        ]))),
        client_to_server(&bvlc(0x04, &unconfirmed_request(8, &[
            ctx_unsigned(0, 1),
            ctx_unsigned(1, 100),
        ]))),
        server_to_client(&bvlc(0x00, &reject_pdu(14, 9))),
        // 13-14: multiple-property read of the controller.
        client_to_server(&bvlc(0x04, &confirmed_request(15, 14, &[
            ctx_object_id(0, 8, 126),
            opening(1),
            ctx_unsigned(0, 77),
            ctx_unsigned(1, 120),
            closing(1),
        ]))),
        server_to_client(&bvlc(0x00, &complex_ack(15, 14, &[
            ctx_object_id(0, 8, 126),
            opening(1),
            ctx_unsigned(2, 77),
            opening(4),
            app_character_string("Main Controller"),
            closing(4),
            closing(1),
        ]))),
        // 15-17: change-of-value subscription and its notification.
        client_to_server(&bvlc(0x04, &confirmed_request(16, 5, &[
            ctx_unsigned(0, 18),
            ctx_object_id(1, 0, 3),
            ctx(2, &[0x00]),
            ctx_unsigned(3, 300),
        ]))),
        server_to_client(&bvlc(0x00, &simple_ack(16, 5))),
        server_to_client(&bvlc(0x00, &unconfirmed_request(2, &[
            ctx_unsigned(0, 18),
            ctx_object_id(1, 8, 126),
            ctx_object_id(2, 0, 3),
            ctx_unsigned(3, 250),
            opening(4),
            ctx_unsigned(0, 85),
            opening(2),
            app_real(21.7),
            closing(2),
            closing(4),
        ]))),
        // 18-19: the denied object-list write from the appendix pair.
        client_to_server(&bvlc(0x04, &confirmed_request(17, 15, &[
            ctx_object_id(0, 8, 126),
            ctx_unsigned(1, 76),
            opening(3),
            app_null(),
            closing(3),
        ]))),
        server_to_client(&bvlc(0x00, &error_pdu(17, 15, 2, 40))),
    ];

    let records: Vec<(u32, u32, &[u8])> = frames
        .iter()
        .enumerate()
        .map(|(i, data)| (1_700_000_000 + i as u32, (i as u32) * 1000, data.as_slice()))
        .collect();
    pcap_file(&records)
}

// ---------------------------------------------------------------------------
// Registry, corpus, and ratings fixtures
// ---------------------------------------------------------------------------

/// Device registry covering the objects in the sample captures.
pub const DEVICE_REGISTRY_JSON: &str = r#"[
  {
    "object_type": "analog-output",
    "instance": 28,
    "name": "AC-100 Server room temperature setting",
    "device_type": "AirConditioning"
  },
  {
    "object_type": "device",
    "instance": 126,
    "name": "BMS-1 Building controller",
    "device_type": "Controller",
    "ip": "192.168.10.20"
  },
  {
    "object_type": "analog-input",
    "instance": 3,
    "name": "TH-2 Zone 2 temperature sensor",
    "device_type": "Sensor"
  },
  {
    "object_type": "binary-output",
    "instance": 7,
    "name": "FAN-7 Exhaust fan relay",
    "device_type": "Ventilation",
    "notes": "Interlocked with AC-100."
  }
]"#;

/// A small protocol handbook used as the demo retrieval corpus.
pub fn corpus_markdown() -> &'static str {
    include_str!("../data/corpus_handbook.md")
}

/// Ratings CSV whose per-method means match the published comparison:
/// method 1 (CI 3.18, CA 4.86), method 2 (3.26, 4.60), method 3
/// (3.23, 4.89), method 4 (3.63, 4.89). 100 records per method: 5 raters
/// by 20 packet files, integer scores 1..=5.
pub fn table_one_ratings_csv() -> String {
    let mut out = String::from("packet_file_id,method,rater_id,ca,ci\n");
    let targets = [
        ("m1", 486u32, 318u32),
        ("m2", 460, 326),
        ("m3", 489, 323),
        ("m4", 489, 363),
    ];
    for (method, ca_sum, ci_sum) in targets {
        let ca_scores = scores_with_sum(100, ca_sum);
        let ci_scores = scores_with_sum(100, ci_sum);
        for i in 0..100 {
            let packet_file = format!("p{:02}", i / 5);
            let rater = format!("r{}", i % 5);
            out.push_str(&format!(
                "{packet_file},{method},{rater},{},{}\n",
                ca_scores[i], ci_scores[i]
            ));
        }
    }
    out
}

/// `count` integer scores in 1..=5 that add up to exactly `total`.
fn scores_with_sum(count: u32, total: u32) -> Vec<u32> {
    assert!(total >= count && total <= count * 5);
    let base = total / count;
    let bumped = (total % count) as usize;
    (0..count as usize)
        .map(|i| if i < bumped { base + 1 } else { base })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_hit_their_sums() {
        for (count, total) in [(100u32, 318u32), (100, 486), (100, 460), (100, 489), (50, 163)] {
            let scores = scores_with_sum(count, total);
            assert_eq!(scores.len(), count as usize);
            assert_eq!(scores.iter().sum::<u32>(), total);
            assert!(scores.iter().all(|s| (1..=5).contains(s)));
        }
    }

    #[test]
    fn evaluation_capture_has_19_bacnet_frames() {
        let capture = crate::capture::read_capture(&evaluation_capture()).unwrap();
        assert_eq!(capture.frames.len(), 19);
        let filtered = crate::capture::filter_bacnet(capture.frames, 47808);
        assert_eq!(filtered.frames.len(), 19);
        for frame in &filtered.frames {
            crate::bacnet::decode_packet(frame).unwrap();
        }
    }

    #[test]
    fn ratings_csv_is_deterministic() {
        assert_eq!(table_one_ratings_csv(), table_one_ratings_csv());
        assert_eq!(table_one_ratings_csv().lines().count(), 401);
    }
}
