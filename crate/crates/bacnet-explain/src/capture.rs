//! Classic pcap ingestion and BACnet/IP frame selection.
//!
//! Reads Ethernet/IPv4/UDP records out of a classic pcap byte stream and
//! keeps just enough link/network metadata for downstream enrichment.
//! Anything that is not Ethernet + IPv4 + UDP is skipped and counted, never
//! an error; structural damage to the capture itself is.

use std::fmt;

use thiserror::Error;

/// Well-known BACnet/IP UDP port (0xBAC0).
pub const BACNET_IP_PORT: u16 = 47808;

/// BVLC type octet that opens every BACnet/IP payload.
pub const BVLC_TYPE: u8 = 0x81;

const PCAP_MAGIC: u32 = 0xA1B2_C3D4;
const PCAP_MAGIC_SWAPPED: u32 = 0xD4C3_B2A1;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const LINKTYPE_ETHERNET: u32 = 1;

/// Errors raised while reading a capture file.
#[derive(Debug, Error)]
pub enum CaptureError {
    /// The file does not start with a classic pcap magic number.
    #[error("unsupported capture format: bad magic 0x{0:08X}")]
    UnsupportedFormat(u32),
    /// The capture uses a data link other than Ethernet.
    #[error("unsupported link type {0} (only Ethernet is handled)")]
    UnsupportedLinkType(u32),
    /// The stream ended in the middle of a record header or body.
    #[error("truncated capture at record {record}")]
    Truncated { record: usize },
}

/// One UDP datagram lifted out of the capture, with its link/network context.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    /// Ordinal position in the capture, 0-based.
    pub index: usize,
    /// Capture timestamp, seconds since epoch.
    pub ts_sec: u32,
    /// Microsecond part of the timestamp.
    pub ts_usec: u32,
    pub src_mac: [u8; 6],
    pub dst_mac: [u8; 6],
    pub src_ip: [u8; 4],
    pub dst_ip: [u8; 4],
    pub src_port: u16,
    pub dst_port: u16,
    /// UDP payload bytes.
    pub payload: Vec<u8>,
}

impl RawFrame {
    /// First three octets of the source MAC.
    pub fn src_oui(&self) -> [u8; 3] {
        [self.src_mac[0], self.src_mac[1], self.src_mac[2]]
    }

    /// First three octets of the destination MAC.
    pub fn dst_oui(&self) -> [u8; 3] {
        [self.dst_mac[0], self.dst_mac[1], self.dst_mac[2]]
    }

    pub fn src_ip_string(&self) -> String {
        let [a, b, c, d] = self.src_ip;
        format!("{a}.{b}.{c}.{d}")
    }

    pub fn dst_ip_string(&self) -> String {
        let [a, b, c, d] = self.dst_ip;
        format!("{a}.{b}.{c}.{d}")
    }
}

/// Counts of records that were read but not turned into frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkippedRecords {
    pub non_ipv4: usize,
    pub non_udp: usize,
    pub malformed: usize,
}

impl SkippedRecords {
    pub fn total(&self) -> usize {
        self.non_ipv4 + self.non_udp + self.malformed
    }
}

/// Result of reading a capture: ordered frames plus skip diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Capture {
    pub frames: Vec<RawFrame>,
    pub skipped: SkippedRecords,
}

impl fmt::Display for SkippedRecords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "skipped {} non-IPv4, {} non-UDP, {} malformed",
            self.non_ipv4, self.non_udp, self.malformed
        )
    }
}

/// Parse a classic pcap byte stream into UDP frames, preserving order.
///
/// Both byte orders of the classic magic are accepted. Records that are not
/// Ethernet/IPv4/UDP are counted in `skipped` rather than failing the read.
pub fn read_capture(bytes: &[u8]) -> Result<Capture, CaptureError> {
    if bytes.len() < 4 {
        let seen = bytes.iter().fold(0u32, |acc, b| (acc << 8) | u32::from(*b));
        return Err(CaptureError::UnsupportedFormat(seen));
    }
    let magic = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let swapped = match magic {
        PCAP_MAGIC => false,
        PCAP_MAGIC_SWAPPED => true,
        other => return Err(CaptureError::UnsupportedFormat(other)),
    };
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(CaptureError::Truncated { record: 0 });
    }
    let read_u32 = |buf: &[u8], at: usize| -> u32 {
        let raw = [buf[at], buf[at + 1], buf[at + 2], buf[at + 3]];
        if swapped {
            u32::from_be_bytes(raw)
        } else {
            u32::from_le_bytes(raw)
        }
    };

    let link_type = read_u32(bytes, 20);
    if link_type != LINKTYPE_ETHERNET {
        return Err(CaptureError::UnsupportedLinkType(link_type));
    }

    let mut capture = Capture::default();
    let mut offset = GLOBAL_HEADER_LEN;
    let mut record = 0usize;
    while offset < bytes.len() {
        if bytes.len() - offset < RECORD_HEADER_LEN {
            return Err(CaptureError::Truncated { record });
        }
        let ts_sec = read_u32(bytes, offset);
        let ts_usec = read_u32(bytes, offset + 4);
        let incl_len = read_u32(bytes, offset + 8) as usize;
        offset += RECORD_HEADER_LEN;
        if bytes.len() - offset < incl_len {
            return Err(CaptureError::Truncated { record });
        }
        let data = &bytes[offset..offset + incl_len];
        offset += incl_len;

        match parse_ethernet_udp(data) {
            Ok((frame_meta, payload)) => capture.frames.push(RawFrame {
                index: record,
                ts_sec,
                ts_usec,
                src_mac: frame_meta.src_mac,
                dst_mac: frame_meta.dst_mac,
                src_ip: frame_meta.src_ip,
                dst_ip: frame_meta.dst_ip,
                src_port: frame_meta.src_port,
                dst_port: frame_meta.dst_port,
                payload: payload.to_vec(),
            }),
            Err(Skip::NonIpv4) => capture.skipped.non_ipv4 += 1,
            Err(Skip::NonUdp) => capture.skipped.non_udp += 1,
            Err(Skip::Malformed) => capture.skipped.malformed += 1,
        }
        record += 1;
    }
    Ok(capture)
}

struct FrameMeta {
    src_mac: [u8; 6],
    dst_mac: [u8; 6],
    src_ip: [u8; 4],
    dst_ip: [u8; 4],
    src_port: u16,
    dst_port: u16,
}

enum Skip {
    NonIpv4,
    NonUdp,
    Malformed,
}

fn parse_ethernet_udp(data: &[u8]) -> Result<(FrameMeta, &[u8]), Skip> {
    if data.len() < 14 {
        return Err(Skip::Malformed);
    }
    let dst_mac: [u8; 6] = data[0..6].try_into().unwrap();
    let src_mac: [u8; 6] = data[6..12].try_into().unwrap();
    let ethertype = u16::from_be_bytes([data[12], data[13]]);
    if ethertype != 0x0800 {
        return Err(Skip::NonIpv4);
    }

    let ip = &data[14..];
    if ip.len() < 20 || ip[0] >> 4 != 4 {
        return Err(Skip::Malformed);
    }
    let ihl = usize::from(ip[0] & 0x0F) * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err(Skip::Malformed);
    }
    let protocol = ip[9];
    if protocol != 17 {
        return Err(Skip::NonUdp);
    }
    // Fragments other than the first carry no UDP header worth decoding.
    let flags_frag = u16::from_be_bytes([ip[6], ip[7]]);
    if flags_frag & 0x1FFF != 0 {
        return Err(Skip::Malformed);
    }
    let src_ip: [u8; 4] = ip[12..16].try_into().unwrap();
    let dst_ip: [u8; 4] = ip[16..20].try_into().unwrap();

    let udp = &ip[ihl..];
    if udp.len() < 8 {
        return Err(Skip::Malformed);
    }
    let src_port = u16::from_be_bytes([udp[0], udp[1]]);
    let dst_port = u16::from_be_bytes([udp[2], udp[3]]);
    let udp_len = usize::from(u16::from_be_bytes([udp[4], udp[5]]));
    if udp_len < 8 {
        return Err(Skip::Malformed);
    }
    let available = udp.len() - 8;
    let payload_len = (udp_len - 8).min(available);
    let payload = &udp[8..8 + payload_len];

    Ok((
        FrameMeta {
            src_mac,
            dst_mac,
            src_ip,
            dst_ip,
            src_port,
            dst_port,
        },
        payload,
    ))
}

/// Frames retained by [`filter_bacnet`] plus the count that fell out.
#[derive(Debug, Clone, Default)]
pub struct Filtered {
    pub frames: Vec<RawFrame>,
    pub dropped: usize,
}

/// Keep frames that involve the BACnet/IP port and open with the BVLC type
/// octet. Non-matching frames are dropped and counted.
pub fn filter_bacnet(frames: Vec<RawFrame>, port: u16) -> Filtered {
    let mut out = Filtered::default();
    for frame in frames {
        let on_port = frame.src_port == port || frame.dst_port == port;
        let is_bvlc = frame.payload.first() == Some(&BVLC_TYPE);
        if on_port && is_bvlc {
            out.frames.push(frame);
        } else {
            out.dropped += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn udp_record(src_port: u16, dst_port: u16, payload: &[u8]) -> Vec<u8> {
        samples::ethernet_udp_record(
            [0x00, 0x1A, 0x2B, 0x01, 0x02, 0x03],
            [0x00, 0x0D, 0x0E, 0x0A, 0x0B, 0x0C],
            [192, 168, 10, 2],
            [192, 168, 10, 20],
            src_port,
            dst_port,
            payload,
        )
    }

    #[test]
    fn empty_capture_yields_no_frames() {
        let bytes = samples::pcap_file(&[]);
        let capture = read_capture(&bytes).unwrap();
        assert!(capture.frames.is_empty());
        assert_eq!(capture.skipped.total(), 0);
    }

    #[test]
    fn two_udp_datagrams_in_order() {
        let r1 = udp_record(47808, 47808, &[0x81, 0x0A, 0x00, 0x04]);
        let r2 = udp_record(47808, 47808, &[0x81, 0x0B, 0x00, 0x04]);
        let bytes = samples::pcap_file(&[(0, 0, &r1), (1, 0, &r2)]);
        let capture = read_capture(&bytes).unwrap();
        assert_eq!(capture.frames.len(), 2);
        assert_eq!(capture.frames[0].index, 0);
        assert_eq!(capture.frames[1].index, 1);
        assert_eq!(capture.frames[0].payload[1], 0x0A);
        assert_eq!(capture.frames[1].payload[1], 0x0B);
    }

    #[test]
    fn bad_magic_is_unsupported_format() {
        let bytes = [0xDE, 0xAD, 0xBE, 0xEF, 0, 0, 0, 0];
        match read_capture(&bytes) {
            Err(CaptureError::UnsupportedFormat(_)) => {}
            other => panic!("expected UnsupportedFormat, got {other:?}"),
        }
    }

    #[test]
    fn byte_swapped_magic_is_accepted() {
        let r1 = udp_record(47808, 47808, &[0x81, 0x0A, 0x00, 0x04]);
        let le = samples::pcap_file(&[(7, 40, &r1)]);
        let be = samples::pcap_file_big_endian(&[(7, 40, &r1)]);
        let from_le = read_capture(&le).unwrap();
        let from_be = read_capture(&be).unwrap();
        assert_eq!(from_le.frames, from_be.frames);
        assert_eq!(from_be.frames[0].ts_sec, 7);
        assert_eq!(from_be.frames[0].ts_usec, 40);
    }

    #[test]
    fn truncated_record_header_names_the_record() {
        let r1 = udp_record(47808, 47808, &[0x81, 0x0A, 0x00, 0x04]);
        let mut bytes = samples::pcap_file(&[(0, 0, &r1)]);
        bytes.extend_from_slice(&[0u8; 5]); // half a record header
        match read_capture(&bytes) {
            Err(CaptureError::Truncated { record }) => assert_eq!(record, 1),
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn truncated_record_body_is_reported() {
        let r1 = udp_record(47808, 47808, &[0x81, 0x0A, 0x00, 0x04]);
        let bytes = samples::pcap_file(&[(0, 0, &r1)]);
        match read_capture(&bytes[..bytes.len() - 3]) {
            Err(CaptureError::Truncated { record }) => assert_eq!(record, 0),
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn non_udp_and_non_ipv4_records_are_counted() {
        let udp = udp_record(47808, 47808, &[0x81, 0x0A, 0x00, 0x04]);
        // ARP ethertype.
        let mut arp = udp.clone();
        arp[12] = 0x08;
        arp[13] = 0x06;
        // TCP protocol number.
        let mut tcp = udp.clone();
        tcp[14 + 9] = 6;
        let bytes = samples::pcap_file(&[(0, 0, &udp), (1, 0, &arp), (2, 0, &tcp)]);
        let capture = read_capture(&bytes).unwrap();
        assert_eq!(capture.frames.len(), 1);
        assert_eq!(capture.skipped.non_ipv4, 1);
        assert_eq!(capture.skipped.non_udp, 1);
    }

    #[test]
    fn non_ethernet_link_type_is_rejected() {
        let mut bytes = samples::pcap_file(&[]);
        bytes[20] = 101; // LINKTYPE_RAW
        match read_capture(&bytes) {
            Err(CaptureError::UnsupportedLinkType(101)) => {}
            other => panic!("expected UnsupportedLinkType, got {other:?}"),
        }
    }

    #[test]
    fn oui_matches_mac_prefix() {
        let r1 = udp_record(47808, 47808, &[0x81, 0x0A, 0x00, 0x04]);
        let bytes = samples::pcap_file(&[(0, 0, &r1)]);
        let capture = read_capture(&bytes).unwrap();
        let frame = &capture.frames[0];
        assert_eq!(frame.src_oui(), [frame.src_mac[0], frame.src_mac[1], frame.src_mac[2]]);
        assert_eq!(frame.dst_oui(), [frame.dst_mac[0], frame.dst_mac[1], frame.dst_mac[2]]);
    }

    #[test]
    fn filter_keeps_bacnet_and_drops_the_rest() {
        let keep = udp_record(47808, 50000, &[0x81, 0x0A, 0x00, 0x04]);
        let wrong_port = udp_record(53, 53, &[0x81, 0x0A, 0x00, 0x04]);
        let wrong_bvlc = udp_record(47808, 47808, &[0x17, 0x0A, 0x00, 0x04]);
        let empty = udp_record(47808, 47808, &[]);
        let bytes = samples::pcap_file(&[
            (0, 0, &keep),
            (1, 0, &wrong_port),
            (2, 0, &wrong_bvlc),
            (3, 0, &empty),
        ]);
        let capture = read_capture(&bytes).unwrap();
        let filtered = filter_bacnet(capture.frames, BACNET_IP_PORT);
        assert_eq!(filtered.frames.len(), 1);
        assert_eq!(filtered.frames[0].index, 0);
        assert_eq!(filtered.dropped, 3);
    }

    #[test]
    fn filter_is_idempotent() {
        let keep = udp_record(47808, 50000, &[0x81, 0x0A, 0x00, 0x04]);
        let drop = udp_record(53, 53, &[0x81]);
        let bytes = samples::pcap_file(&[(0, 0, &keep), (1, 0, &drop)]);
        let capture = read_capture(&bytes).unwrap();
        let once = filter_bacnet(capture.frames, BACNET_IP_PORT);
        let twice = filter_bacnet(once.frames.clone(), BACNET_IP_PORT);
        assert_eq!(once.frames, twice.frames);
        assert_eq!(twice.dropped, 0);
    }
}
