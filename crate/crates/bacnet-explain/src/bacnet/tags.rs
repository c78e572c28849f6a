//! Tag-level decoding of APDU service parameters.
//!
//! Service parameters are a flat stream of tagged values: application tags
//! carry primitive data, context tags are positional and service-specific,
//! and opening/closing pairs bracket constructed data. The reader never
//! reads past its input; a malformed tag stops the stream so the caller can
//! retain the remainder verbatim.

use super::ObjectRef;

/// Why the tag stream stopped before the end of input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagFault {
    /// Input ended inside a tag header or its content.
    Truncated,
    /// A length field exceeded the remaining input.
    LengthOverrun,
}

/// One parsed tag from the stream.
#[derive(Debug, Clone, PartialEq)]
pub enum RawTag<'a> {
    /// Application-class tag with its content bytes. For booleans the value
    /// lives in the header; `data` is empty and `lvt` holds it.
    Application { number: u8, lvt: u8, data: &'a [u8] },
    /// Context-specific tag with its content bytes.
    Context { number: u8, data: &'a [u8] },
    Opening(u8),
    Closing(u8),
}

/// Sequential reader over a tag stream.
pub struct TagReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> TagReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        TagReader { data, pos: 0 }
    }

    /// Byte offset of the next unread tag.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.data.len()
    }

    /// Parse the next tag, or `Ok(None)` at end of input. On `Err` the
    /// position is left at the start of the offending tag.
    pub fn next_tag(&mut self) -> Result<Option<RawTag<'a>>, TagFault> {
        if self.is_empty() {
            return Ok(None);
        }
        let start = self.pos;
        match self.parse_at(start) {
            Ok((tag, next)) => {
                self.pos = next;
                Ok(Some(tag))
            }
            Err(fault) => {
                self.pos = start;
                Err(fault)
            }
        }
    }

    fn parse_at(&self, mut pos: usize) -> Result<(RawTag<'a>, usize), TagFault> {
        let initial = self.data[pos];
        pos += 1;
        let mut number = initial >> 4;
        let context = initial & 0x08 != 0;
        let lvt = initial & 0x07;

        if number == 0x0F {
            let ext = *self.data.get(pos).ok_or(TagFault::Truncated)?;
            number = ext;
            pos += 1;
        }

        match lvt {
            6 => return Ok((RawTag::Opening(number), pos)),
            7 => return Ok((RawTag::Closing(number), pos)),
            _ => {}
        }

        // Application boolean encodes its value in the LVT field.
        if !context && number == 1 {
            return Ok((
                RawTag::Application {
                    number,
                    lvt,
                    data: &self.data[pos..pos],
                },
                pos,
            ));
        }

        let length = if lvt < 5 {
            usize::from(lvt)
        } else {
            let first = *self.data.get(pos).ok_or(TagFault::Truncated)?;
            pos += 1;
            match first {
                254 => {
                    let bytes = self.data.get(pos..pos + 2).ok_or(TagFault::Truncated)?;
                    pos += 2;
                    usize::from(u16::from_be_bytes([bytes[0], bytes[1]]))
                }
                255 => {
                    let bytes = self.data.get(pos..pos + 4).ok_or(TagFault::Truncated)?;
                    pos += 4;
                    u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize
                }
                n => usize::from(n),
            }
        };

        let data = self
            .data
            .get(pos..pos.checked_add(length).ok_or(TagFault::LengthOverrun)?)
            .ok_or(TagFault::LengthOverrun)?;
        pos += length;

        let tag = if context {
            RawTag::Context { number, data }
        } else {
            RawTag::Application { number, lvt, data }
        };
        Ok((tag, pos))
    }
}

/// A decoded primitive application value.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveValue {
    Null,
    Boolean(bool),
    Unsigned(u64),
    Signed(i64),
    Real(f32),
    CharacterString(String),
    Enumerated(u32),
    ObjectId(ObjectRef),
    /// Tags outside the decoded set (double, octet/bit strings, date, time,
    /// vendor extensions) are kept verbatim and rendered as hex.
    Opaque { tag: u8, bytes: Vec<u8> },
}

impl PrimitiveValue {
    /// Decode an application tag's content.
    pub fn from_application(number: u8, lvt: u8, data: &[u8]) -> PrimitiveValue {
        match number {
            0 if data.is_empty() => PrimitiveValue::Null,
            1 => PrimitiveValue::Boolean(lvt != 0),
            2 if (1..=8).contains(&data.len()) => PrimitiveValue::Unsigned(be_u64(data)),
            3 if (1..=8).contains(&data.len()) => PrimitiveValue::Signed(be_i64(data)),
            4 if data.len() == 4 => {
                PrimitiveValue::Real(f32::from_be_bytes([data[0], data[1], data[2], data[3]]))
            }
            7 if !data.is_empty() && data[0] == 0 => {
                PrimitiveValue::CharacterString(String::from_utf8_lossy(&data[1..]).into_owned())
            }
            9 if (1..=4).contains(&data.len()) => PrimitiveValue::Enumerated(be_u64(data) as u32),
            12 if data.len() == 4 => PrimitiveValue::ObjectId(ObjectRef::from_encoded(
                u32::from_be_bytes([data[0], data[1], data[2], data[3]]),
            )),
            _ => PrimitiveValue::Opaque {
                tag: number,
                bytes: data.to_vec(),
            },
        }
    }

    /// Type label used in rendered value lines.
    pub fn type_label(&self) -> &'static str {
        match self {
            PrimitiveValue::Null => "null",
            PrimitiveValue::Boolean(_) => "boolean",
            PrimitiveValue::Unsigned(_) => "unsigned",
            PrimitiveValue::Signed(_) => "signed",
            PrimitiveValue::Real(_) => "real",
            PrimitiveValue::CharacterString(_) => "character-string",
            PrimitiveValue::Enumerated(_) => "enumerated",
            PrimitiveValue::ObjectId(_) => "object-identifier",
            PrimitiveValue::Opaque { .. } => "opaque",
        }
    }
}

fn be_u64(data: &[u8]) -> u64 {
    data.iter().fold(0u64, |acc, b| (acc << 8) | u64::from(*b))
}

fn be_i64(data: &[u8]) -> i64 {
    let mut value = if data[0] & 0x80 != 0 { -1i64 } else { 0 };
    for b in data {
        value = (value << 8) | i64::from(*b);
    }
    value
}

/// Render content bytes as `0x…` hex. Empty content renders as `0x`.
pub fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(2 + bytes.len() * 2);
    out.push_str("0x");
    for b in bytes {
        out.push_str(&format!("{b:02X}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_application_real() {
        let mut reader = TagReader::new(&[0x44, 0x42, 0xC8, 0x00, 0x00]);
        match reader.next_tag().unwrap().unwrap() {
            RawTag::Application { number: 4, lvt: 4, data } => {
                assert_eq!(PrimitiveValue::from_application(4, 4, data), PrimitiveValue::Real(100.0));
            }
            other => panic!("unexpected tag {other:?}"),
        }
        assert!(reader.is_empty());
    }

    #[test]
    fn reads_context_and_bracket_tags() {
        // Context 0 len 1, opening 2, null, closing 2.
        let mut reader = TagReader::new(&[0x09, 0x55, 0x2E, 0x00, 0x2F]);
        assert_eq!(
            reader.next_tag().unwrap().unwrap(),
            RawTag::Context { number: 0, data: &[0x55] }
        );
        assert_eq!(reader.next_tag().unwrap().unwrap(), RawTag::Opening(2));
        match reader.next_tag().unwrap().unwrap() {
            RawTag::Application { number: 0, data, .. } => assert!(data.is_empty()),
            other => panic!("unexpected tag {other:?}"),
        }
        assert_eq!(reader.next_tag().unwrap().unwrap(), RawTag::Closing(2));
        assert_eq!(reader.next_tag().unwrap(), None);
    }

    #[test]
    fn boolean_value_lives_in_the_header() {
        let mut reader = TagReader::new(&[0x11]);
        match reader.next_tag().unwrap().unwrap() {
            RawTag::Application { number: 1, lvt, data } => {
                assert!(data.is_empty());
                assert_eq!(PrimitiveValue::from_application(1, lvt, data), PrimitiveValue::Boolean(true));
            }
            other => panic!("unexpected tag {other:?}"),
        }
    }

    #[test]
    fn extended_tag_number_and_length() {
        // Context tag 0x21 (extended), extended length 5.
        let mut reader = TagReader::new(&[0xFD, 0x21, 0x05, 1, 2, 3, 4, 5]);
        assert_eq!(
            reader.next_tag().unwrap().unwrap(),
            RawTag::Context { number: 0x21, data: &[1, 2, 3, 4, 5] }
        );
    }

    #[test]
    fn overrun_length_stops_at_the_tag() {
        let mut reader = TagReader::new(&[0x09, 0x55, 0x24, 0x01]); // ctx ok, then app len 4 with 1 byte left
        assert!(reader.next_tag().unwrap().is_some());
        let at = reader.position();
        assert_eq!(reader.next_tag(), Err(TagFault::LengthOverrun));
        assert_eq!(reader.position(), at);
    }

    #[test]
    fn character_string_decodes_utf8() {
        let mut bytes = vec![0x75, 0x06, 0x00];
        bytes.extend_from_slice(b"AC-10");
        let mut reader = TagReader::new(&bytes);
        match reader.next_tag().unwrap().unwrap() {
            RawTag::Application { number: 7, lvt, data } => {
                assert_eq!(
                    PrimitiveValue::from_application(7, lvt, data),
                    PrimitiveValue::CharacterString("AC-10".to_string())
                );
            }
            other => panic!("unexpected tag {other:?}"),
        }
    }

    #[test]
    fn signed_values_sign_extend() {
        assert_eq!(PrimitiveValue::from_application(3, 1, &[0xFF]), PrimitiveValue::Signed(-1));
        assert_eq!(PrimitiveValue::from_application(3, 2, &[0x01, 0x00]), PrimitiveValue::Signed(256));
    }
}
