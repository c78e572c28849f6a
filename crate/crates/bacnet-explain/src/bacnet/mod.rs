//! BACnet/IP frame decoding: BVLC framing, NPDU routing header, and APDU
//! service payload, plus the canonical plain-text rendering of a decoded
//! packet list.
//!
//! Decoding is total over arbitrary bytes: every failure is a typed error,
//! and an APDU body the interpreter cannot finish is kept verbatim as a
//! flagged suffix rather than dropped.

pub mod names;
pub mod tags;

mod interpret;
mod render;

pub use names::ServiceClass;
pub use render::{render_packet_text, render_packet_text_with, RenderOptions};
pub use tags::PrimitiveValue;

use thiserror::Error;

use crate::capture::RawFrame;
use crate::registry::Annotation;

/// Errors raised while decoding one BACnet/IP payload.
#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("payload does not start with the BVLC type octet (got 0x{0:02X})")]
    NotBvlc(u8),
    #[error("malformed BVLC header: {0}")]
    MalformedBvlc(&'static str),
    #[error("BVLC length {declared} disagrees with payload length {actual}")]
    BvlcLengthMismatch { declared: usize, actual: usize },
    #[error("BVLC function 0x{0:02X} carries no NPDU")]
    BvlcFunctionWithoutNpdu(u8),
    #[error("unsupported NPDU version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated NPDU")]
    TruncatedNpdu,
    #[error("network-layer message 0x{message_type:02X} carries no APDU")]
    NetworkLayerMessage { message_type: u8 },
    #[error("malformed APDU: {0}")]
    MalformedApdu(&'static str),
}

/// A BACnet object identifier: 10-bit type code, 22-bit instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectRef {
    pub type_code: u16,
    pub instance: u32,
}

impl ObjectRef {
    pub fn new(type_code: u16, instance: u32) -> Self {
        ObjectRef { type_code, instance }
    }

    /// Split a 32-bit encoded identifier into type code and instance.
    pub fn from_encoded(encoded: u32) -> Self {
        ObjectRef {
            type_code: (encoded >> 22) as u16,
            instance: encoded & 0x003F_FFFF,
        }
    }

    /// Pack back into the 32-bit wire encoding.
    pub fn encoded(&self) -> u32 {
        (u32::from(self.type_code) << 22) | (self.instance & 0x003F_FFFF)
    }

    /// Human name of the type code, `unknown-type-N` outside the table.
    pub fn type_name(&self) -> String {
        names::object_type_name(self.type_code)
    }
}

impl std::fmt::Display for ObjectRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}, {}", self.type_name(), self.instance)
    }
}

/// Decode a 32-bit object identifier. Total: any input maps to a pair.
pub fn decode_object_identifier(encoded: u32) -> ObjectRef {
    ObjectRef::from_encoded(encoded)
}

/// Network-layer source or destination: network number plus address bytes.
/// An empty address with a destination network means broadcast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkAddress {
    pub net: u16,
    pub addr: Vec<u8>,
}

/// Decoded NPDU header fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NpduInfo {
    pub version: u8,
    pub control: u8,
    pub destination: Option<NetworkAddress>,
    pub source: Option<NetworkAddress>,
    pub hop_count: Option<u8>,
    pub expects_reply: bool,
    pub priority: u8,
}

/// APDU type from the high nibble of the first APDU octet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PduType {
    ConfirmedReq,
    UnconfirmedReq,
    SimpleAck,
    ComplexAck,
    SegmentAck,
    Error,
    Reject,
    Abort,
}

impl PduType {
    pub fn from_nibble(nibble: u8) -> Option<PduType> {
        match nibble {
            0 => Some(PduType::ConfirmedReq),
            1 => Some(PduType::UnconfirmedReq),
            2 => Some(PduType::SimpleAck),
            3 => Some(PduType::ComplexAck),
            4 => Some(PduType::SegmentAck),
            5 => Some(PduType::Error),
            6 => Some(PduType::Reject),
            7 => Some(PduType::Abort),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PduType::ConfirmedReq => "Confirmed-REQ",
            PduType::UnconfirmedReq => "Unconfirmed-REQ",
            PduType::SimpleAck => "Simple-ACK",
            PduType::ComplexAck => "Complex-ACK",
            PduType::SegmentAck => "Segment-ACK",
            PduType::Error => "Error",
            PduType::Reject => "Reject",
            PduType::Abort => "Abort",
        }
    }

    /// Which service choice table applies to this PDU type, if any.
    pub fn service_class(&self) -> Option<ServiceClass> {
        match self {
            PduType::ConfirmedReq | PduType::SimpleAck | PduType::ComplexAck | PduType::Error => {
                Some(ServiceClass::Confirmed)
            }
            PduType::UnconfirmedReq => Some(ServiceClass::Unconfirmed),
            PduType::SegmentAck | PduType::Reject | PduType::Abort => None,
        }
    }
}

/// The service selector carried by request, ACK, and error PDUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ServiceChoice {
    pub class: ServiceClass,
    pub code: u8,
}

impl ServiceChoice {
    pub fn name(&self) -> Option<&'static str> {
        names::service_name(self.class, self.code)
    }

    /// Name for display, falling back to `unknown`.
    pub fn display_name(&self) -> &'static str {
        self.name().unwrap_or("unknown")
    }
}

/// One decoded APDU parameter in stream order.
#[derive(Debug, Clone, PartialEq)]
pub enum ApduElement {
    ObjectId(ObjectRef),
    PropertyId(u32),
    ArrayIndex(u64),
    /// A property value; `property` is the identifier it was written or read
    /// under when the service structure makes that known.
    Value {
        property: Option<u32>,
        value: PrimitiveValue,
    },
    Priority(u64),
    ErrorClass(u32),
    ErrorCode(u32),
    RejectReason(u8),
    AbortReason(u8),
    /// An application-tagged value with no positional role.
    Primitive(PrimitiveValue),
    /// A context tag the interpreter has no schema for.
    ContextRaw { tag: u8, bytes: Vec<u8> },
}

/// Decoded APDU: header fields plus interpreted parameter elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ApduInfo {
    pub pdu_type: PduType,
    pub service_choice: Option<ServiceChoice>,
    pub invoke_id: Option<u8>,
    pub elements: Vec<ApduElement>,
    /// Segmented PDUs are reported, not reassembled; their body stays in
    /// `undecoded`.
    pub segmented: bool,
    /// Bytes after the last successfully decoded element, kept verbatim.
    pub undecoded: Option<Vec<u8>>,
    /// The full APDU bytes as they appeared on the wire.
    pub raw: Vec<u8>,
}

/// One frame's decoded layers plus any device annotations attached later.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPacket {
    pub frame: RawFrame,
    pub npdu: NpduInfo,
    pub apdu: ApduInfo,
    pub annotations: Vec<Annotation>,
}

impl DecodedPacket {
    /// Object identifiers mentioned by the APDU, in order of appearance,
    /// without duplicates.
    pub fn object_refs(&self) -> Vec<ObjectRef> {
        let mut seen = Vec::new();
        for element in &self.apdu.elements {
            let candidate = match element {
                ApduElement::ObjectId(r) => Some(*r),
                ApduElement::Value {
                    value: PrimitiveValue::ObjectId(r),
                    ..
                }
                | ApduElement::Primitive(PrimitiveValue::ObjectId(r)) => Some(*r),
                _ => None,
            };
            if let Some(r) = candidate {
                if !seen.contains(&r) {
                    seen.push(r);
                }
            }
        }
        seen
    }

    /// The APDU portion of the rendered text, used as the retrieval query.
    pub fn apdu_text(&self) -> String {
        render::render_apdu_section(self)
    }
}

const BVLC_FUNCTION_FORWARDED: u8 = 0x04;
const BVLC_FUNCTION_UNICAST: u8 = 0x0A;
const BVLC_FUNCTION_BROADCAST: u8 = 0x0B;

/// Decode one BACnet/IP frame into its NPDU and APDU layers.
pub fn decode_packet(frame: &RawFrame) -> Result<DecodedPacket, DecodeError> {
    let payload = &frame.payload;
    let first = *payload.first().ok_or(DecodeError::EmptyPayload)?;
    if first != crate::capture::BVLC_TYPE {
        return Err(DecodeError::NotBvlc(first));
    }
    if payload.len() < 4 {
        return Err(DecodeError::MalformedBvlc("shorter than the 4-byte header"));
    }
    let function = payload[1];
    let declared = usize::from(u16::from_be_bytes([payload[2], payload[3]]));
    if declared != payload.len() {
        return Err(DecodeError::BvlcLengthMismatch {
            declared,
            actual: payload.len(),
        });
    }
    let npdu_start = match function {
        BVLC_FUNCTION_UNICAST | BVLC_FUNCTION_BROADCAST => 4,
        // Forwarded NPDUs carry the 6-byte origin address first.
        BVLC_FUNCTION_FORWARDED => 10,
        other => return Err(DecodeError::BvlcFunctionWithoutNpdu(other)),
    };
    if payload.len() < npdu_start {
        return Err(DecodeError::MalformedBvlc("forwarded header truncated"));
    }

    let (npdu, apdu_bytes) = decode_npdu(&payload[npdu_start..])?;
    let apdu = decode_apdu(apdu_bytes)?;

    Ok(DecodedPacket {
        frame: frame.clone(),
        npdu,
        apdu,
        annotations: Vec::new(),
    })
}

fn decode_npdu(bytes: &[u8]) -> Result<(NpduInfo, &[u8]), DecodeError> {
    if bytes.len() < 2 {
        return Err(DecodeError::TruncatedNpdu);
    }
    let version = bytes[0];
    if version != 1 {
        return Err(DecodeError::UnsupportedVersion(version));
    }
    let control = bytes[1];
    let mut pos = 2usize;

    let mut take = |n: usize| -> Result<&[u8], DecodeError> {
        let slice = bytes.get(pos..pos + n).ok_or(DecodeError::TruncatedNpdu)?;
        pos += n;
        Ok(slice)
    };

    let destination = if control & 0x20 != 0 {
        let net = u16::from_be_bytes(take(2)?.try_into().unwrap());
        let len = usize::from(take(1)?[0]);
        let addr = take(len)?.to_vec();
        Some(NetworkAddress { net, addr })
    } else {
        None
    };
    let source = if control & 0x08 != 0 {
        let net = u16::from_be_bytes(take(2)?.try_into().unwrap());
        let len = usize::from(take(1)?[0]);
        let addr = take(len)?.to_vec();
        Some(NetworkAddress { net, addr })
    } else {
        None
    };
    let hop_count = if destination.is_some() {
        Some(take(1)?[0])
    } else {
        None
    };

    if control & 0x80 != 0 {
        let message_type = take(1)?[0];
        return Err(DecodeError::NetworkLayerMessage { message_type });
    }

    let npdu = NpduInfo {
        version,
        control,
        destination,
        source,
        hop_count,
        expects_reply: control & 0x04 != 0,
        priority: control & 0x03,
    };
    Ok((npdu, &bytes[pos..]))
}

fn decode_apdu(bytes: &[u8]) -> Result<ApduInfo, DecodeError> {
    let first = *bytes
        .first()
        .ok_or(DecodeError::MalformedApdu("no APDU bytes"))?;
    let pdu_type = PduType::from_nibble(first >> 4)
        .ok_or(DecodeError::MalformedApdu("reserved PDU type nibble"))?;

    let need = |n: usize| -> Result<(), DecodeError> {
        if bytes.len() < n {
            Err(DecodeError::MalformedApdu("shorter than its mandatory header"))
        } else {
            Ok(())
        }
    };

    let mut segmented = false;
    let (service_choice, invoke_id, body_start) = match pdu_type {
        PduType::ConfirmedReq => {
            segmented = first & 0x08 != 0;
            if segmented {
                need(6)?;
                (Some(bytes[5]), Some(bytes[2]), 6)
            } else {
                need(4)?;
                (Some(bytes[3]), Some(bytes[2]), 4)
            }
        }
        PduType::UnconfirmedReq => {
            need(2)?;
            (Some(bytes[1]), None, 2)
        }
        PduType::SimpleAck => {
            need(3)?;
            (Some(bytes[2]), Some(bytes[1]), 3)
        }
        PduType::ComplexAck => {
            segmented = first & 0x08 != 0;
            if segmented {
                need(5)?;
                (Some(bytes[4]), Some(bytes[1]), 5)
            } else {
                need(3)?;
                (Some(bytes[2]), Some(bytes[1]), 3)
            }
        }
        PduType::SegmentAck => {
            need(4)?;
            (None, Some(bytes[1]), 4)
        }
        PduType::Error => {
            need(3)?;
            (Some(bytes[2]), Some(bytes[1]), 3)
        }
        PduType::Reject | PduType::Abort => {
            need(3)?;
            (None, Some(bytes[1]), 2)
        }
    };

    let service_choice = service_choice.and_then(|code| {
        pdu_type
            .service_class()
            .map(|class| ServiceChoice { class, code })
    });

    let body = &bytes[body_start..];
    let (elements, undecoded) = if segmented {
        // A segment body is a fragment of a larger request; keep it whole.
        let suffix = (!body.is_empty()).then(|| body.to_vec());
        (Vec::new(), suffix)
    } else {
        match pdu_type {
            PduType::Reject => (vec![ApduElement::RejectReason(bytes[2])], None),
            PduType::Abort => (vec![ApduElement::AbortReason(bytes[2])], None),
            _ => interpret::interpret_body(pdu_type, service_choice, body),
        }
    };

    Ok(ApduInfo {
        pdu_type,
        service_choice,
        invoke_id,
        elements,
        segmented,
        undecoded,
        raw: bytes.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
    use crate::samples;

    fn decode_all(pcap: &[u8]) -> Vec<DecodedPacket> {
        let capture = read_capture(pcap).unwrap();
        let filtered = filter_bacnet(capture.frames, BACNET_IP_PORT);
        filtered
            .frames
            .iter()
            .map(|f| decode_packet(f).unwrap())
            .collect()
    }

    #[test]
    fn object_identifier_decodes_the_documented_pairs() {
        let r = decode_object_identifier(0x0040_001C);
        assert_eq!((r.type_name().as_str(), r.instance), ("analog-output", 28));
        let r = decode_object_identifier(0x0200_007E);
        assert_eq!((r.type_name().as_str(), r.instance), ("device", 126));
        let r = decode_object_identifier(0);
        assert_eq!((r.type_name().as_str(), r.instance), ("analog-input", 0));
    }

    #[test]
    fn object_identifier_round_trips_over_random_samples() {
        // Deterministic LCG over the full valid field ranges.
        let mut state = 0x2545_F491_4F6C_DD1Du64;
        for _ in 0..10_000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let type_code = ((state >> 33) % 1024) as u16;
            let instance = ((state >> 11) % 4_194_303) as u32;
            let reference = ObjectRef::new(type_code, instance);
            assert_eq!(ObjectRef::from_encoded(reference.encoded()), reference);
        }
    }

    #[test]
    fn write_property_multiple_request_decodes_exactly() {
        let packets = decode_all(&samples::write_property_multiple_capture());
        assert_eq!(packets.len(), 1);
        let apdu = &packets[0].apdu;
        assert_eq!(apdu.pdu_type, PduType::ConfirmedReq);
        let service = apdu.service_choice.unwrap();
        assert_eq!((service.display_name(), service.code), ("writePropertyMultiple", 16));
        assert!(!apdu.segmented);
        assert!(apdu.undecoded.is_none());
        assert_eq!(
            apdu.elements,
            vec![
                ApduElement::ObjectId(ObjectRef::new(1, 28)),
                ApduElement::PropertyId(85),
                ApduElement::Value {
                    property: Some(85),
                    value: PrimitiveValue::Real(100.0),
                },
                ApduElement::Priority(1),
            ]
        );
    }

    #[test]
    fn write_property_error_pair_decodes_exactly() {
        let packets = decode_all(&samples::write_property_error_capture());
        assert_eq!(packets.len(), 2);

        let request = &packets[0].apdu;
        assert_eq!(request.pdu_type, PduType::ConfirmedReq);
        let service = request.service_choice.unwrap();
        assert_eq!((service.display_name(), service.code), ("writeProperty", 15));
        assert_eq!(
            request.elements,
            vec![
                ApduElement::ObjectId(ObjectRef::new(8, 126)),
                ApduElement::PropertyId(76),
                ApduElement::Value {
                    property: Some(76),
                    value: PrimitiveValue::Null,
                },
            ]
        );

        let error = &packets[1].apdu;
        assert_eq!(error.pdu_type, PduType::Error);
        let service = error.service_choice.unwrap();
        assert_eq!((service.display_name(), service.code), ("writeProperty", 15));
        assert_eq!(
            error.elements,
            vec![ApduElement::ErrorClass(2), ApduElement::ErrorCode(40)]
        );
    }

    #[test]
    fn npdu_version_other_than_one_is_rejected() {
        // BVLC + NPDU version 2.
        let payload = vec![0x81, 0x0A, 0x00, 0x08, 0x02, 0x00, 0x10, 0x08];
        let frame = samples::frame_with_payload(payload);
        match decode_packet(&frame) {
            Err(DecodeError::UnsupportedVersion(2)) => {}
            other => panic!("expected UnsupportedVersion, got {other:?}"),
        }
    }

    #[test]
    fn bvlc_length_mismatch_is_rejected() {
        let payload = vec![0x81, 0x0A, 0x00, 0x09, 0x01, 0x00, 0x10, 0x08];
        let frame = samples::frame_with_payload(payload);
        match decode_packet(&frame) {
            Err(DecodeError::BvlcLengthMismatch { declared: 9, actual: 8 }) => {}
            other => panic!("expected BvlcLengthMismatch, got {other:?}"),
        }
    }

    #[test]
    fn short_apdu_is_malformed() {
        // Confirmed-REQ header needs 4 octets; only 2 are present.
        let payload = vec![0x81, 0x0A, 0x00, 0x08, 0x01, 0x00, 0x00, 0x05];
        let frame = samples::frame_with_payload(payload);
        match decode_packet(&frame) {
            Err(DecodeError::MalformedApdu(_)) => {}
            other => panic!("expected MalformedApdu, got {other:?}"),
        }
    }

    #[test]
    fn npdu_destination_and_hop_count_are_linked() {
        // Control 0x24: destination present + expects reply.
        let apdu = [0x10u8, 0x08];
        let mut npdu = vec![0x01, 0x24, 0x00, 0x05, 0x01, 0x63, 0xFF];
        npdu.extend_from_slice(&apdu);
        let mut payload = vec![0x81, 0x0B, 0x00, 0x00];
        payload.extend_from_slice(&npdu);
        let len = payload.len() as u16;
        payload[2..4].copy_from_slice(&len.to_be_bytes());
        let frame = samples::frame_with_payload(payload);
        let packet = decode_packet(&frame).unwrap();
        let dest = packet.npdu.destination.as_ref().unwrap();
        assert_eq!(dest.net, 5);
        assert_eq!(dest.addr, vec![0x63]);
        assert_eq!(packet.npdu.hop_count, Some(255));
        assert!(packet.npdu.source.is_none());
        assert!(packet.npdu.expects_reply);
    }

    #[test]
    fn network_layer_message_is_a_typed_error() {
        // Control bit 7 set: who-is-router-to-network.
        let payload = vec![0x81, 0x0A, 0x00, 0x07, 0x01, 0x80, 0x00];
        let frame = samples::frame_with_payload(payload);
        match decode_packet(&frame) {
            Err(DecodeError::NetworkLayerMessage { message_type: 0 }) => {}
            other => panic!("expected NetworkLayerMessage, got {other:?}"),
        }
    }

    #[test]
    fn segmented_request_is_flagged_not_reassembled() {
        // Confirmed-REQ with SEG set: seq 0, window 4, service 12, fragment.
        let apdu = [0x08, 0x04, 0x01, 0x00, 0x04, 0x0C, 0xDE, 0xAD];
        let mut payload = vec![0x81, 0x0A, 0x00, 0x00, 0x01, 0x00];
        payload.extend_from_slice(&apdu);
        let len = payload.len() as u16;
        payload[2..4].copy_from_slice(&len.to_be_bytes());
        let frame = samples::frame_with_payload(payload);
        let packet = decode_packet(&frame).unwrap();
        assert!(packet.apdu.segmented);
        assert!(packet.apdu.elements.is_empty());
        assert_eq!(packet.apdu.undecoded, Some(vec![0xDE, 0xAD]));
        assert_eq!(packet.apdu.service_choice.unwrap().code, 12);
    }

    #[test]
    fn undecodable_suffix_is_retained_and_flagged() {
        // writeProperty request whose parameters end in a torn tag.
        let apdu = [0x00, 0x04, 0x01, 0x0F, 0x0C, 0x02, 0x00, 0x00, 0x7E, 0x75, 0x10, 0x00];
        let mut payload = vec![0x81, 0x0A, 0x00, 0x00, 0x01, 0x00];
        payload.extend_from_slice(&apdu);
        let len = payload.len() as u16;
        payload[2..4].copy_from_slice(&len.to_be_bytes());
        let frame = samples::frame_with_payload(payload);
        let packet = decode_packet(&frame).unwrap();
        assert_eq!(
            packet.apdu.elements,
            vec![ApduElement::ObjectId(ObjectRef::new(8, 126))]
        );
        assert_eq!(packet.apdu.undecoded, Some(vec![0x75, 0x10, 0x00]));
    }

    #[test]
    fn decode_never_panics_on_random_payloads() {
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20_000 {
            let len = (next() % 64) as usize;
            let mut payload = Vec::with_capacity(len);
            for _ in 0..len {
                payload.push((next() & 0xFF) as u8);
            }
            // Bias half the cases towards plausible BVLC framing so the
            // deeper layers get exercised too.
            if next() % 2 == 0 && payload.len() >= 4 {
                payload[0] = 0x81;
                payload[1] = 0x0A;
                let l = (payload.len() as u16).to_be_bytes();
                payload[2] = l[0];
                payload[3] = l[1];
            }
            let frame = samples::frame_with_payload(payload);
            let _ = decode_packet(&frame);
        }
    }
}
