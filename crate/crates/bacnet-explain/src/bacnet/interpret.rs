//! Service-aware interpretation of APDU parameter streams.
//!
//! Context tags are positional: what context tag 0 means depends on the
//! service choice. The interpreters here cover the property-access and
//! discovery services that dominate building-automation traffic; anything
//! else goes through a generic pass that keeps every tag visible.

use super::names::ServiceClass;
use super::tags::{PrimitiveValue, RawTag, TagReader};
use super::{ApduElement, ObjectRef, PduType, ServiceChoice};

/// Interpret an APDU body. Returns the decoded elements plus any suffix the
/// tag reader could not parse, which is retained verbatim.
pub(super) fn interpret_body(
    pdu_type: PduType,
    service: Option<ServiceChoice>,
    body: &[u8],
) -> (Vec<ApduElement>, Option<Vec<u8>>) {
    let (tokens, suffix) = tokenize(body);
    let mut cursor = Cursor::new(&tokens);

    let mut elements = match (pdu_type, service) {
        (PduType::Error, _) => error_elements(&mut cursor),
        (_, Some(choice)) if choice.class == ServiceClass::Confirmed => match choice.code {
            12 | 15 => property_access(&mut cursor, pdu_type, choice.code == 15),
            16 => write_property_multiple(&mut cursor),
            14 => read_property_multiple(&mut cursor, pdu_type),
            5 => subscribe_cov(&mut cursor),
            1 => cov_notification(&mut cursor),
            _ => Vec::new(),
        },
        (_, Some(choice)) if choice.class == ServiceClass::Unconfirmed => match choice.code {
            2 => cov_notification(&mut cursor),
            8 => who_is(&mut cursor),
            7 => who_has(&mut cursor),
            _ => Vec::new(),
        },
        _ => Vec::new(),
    };

    // Whatever a schema did not consume still shows up, one element per tag.
    while let Some(token) = cursor.next() {
        elements.push(generic_element(token));
    }

    (elements, suffix)
}

/// Split the body into tags; a tag fault leaves the remainder as a suffix.
fn tokenize(body: &[u8]) -> (Vec<RawTag<'_>>, Option<Vec<u8>>) {
    let mut reader = TagReader::new(body);
    let mut tokens = Vec::new();
    loop {
        match reader.next_tag() {
            Ok(Some(tag)) => tokens.push(tag),
            Ok(None) => return (tokens, None),
            Err(_) => {
                let rest = body[reader.position()..].to_vec();
                return (tokens, Some(rest));
            }
        }
    }
}

struct Cursor<'t, 'a> {
    tokens: &'t [RawTag<'a>],
    pos: usize,
}

impl<'t, 'a> Cursor<'t, 'a> {
    fn new(tokens: &'t [RawTag<'a>]) -> Self {
        Cursor { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&'t RawTag<'a>> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'t RawTag<'a>> {
        let token = self.tokens.get(self.pos)?;
        self.pos += 1;
        Some(token)
    }

    /// Consume a context tag with this number, returning its content.
    fn take_context(&mut self, number: u8) -> Option<&'a [u8]> {
        match self.peek() {
            Some(RawTag::Context { number: n, data }) if *n == number => {
                self.pos += 1;
                Some(data)
            }
            _ => None,
        }
    }

    fn enter(&mut self, number: u8) -> bool {
        matches!(self.peek(), Some(RawTag::Opening(n)) if *n == number) && {
            self.pos += 1;
            true
        }
    }

    fn leave(&mut self, number: u8) -> bool {
        matches!(self.peek(), Some(RawTag::Closing(n)) if *n == number) && {
            self.pos += 1;
            true
        }
    }
}

fn be_u64(data: &[u8]) -> Option<u64> {
    if data.is_empty() || data.len() > 8 {
        return None;
    }
    Some(data.iter().fold(0u64, |acc, b| (acc << 8) | u64::from(*b)))
}

fn context_object_id(data: &[u8]) -> Option<ObjectRef> {
    if data.len() == 4 {
        Some(ObjectRef::from_encoded(u32::from_be_bytes([
            data[0], data[1], data[2], data[3],
        ])))
    } else {
        None
    }
}

fn generic_element(token: &RawTag<'_>) -> ApduElement {
    match token {
        RawTag::Application { number, lvt, data } => {
            match PrimitiveValue::from_application(*number, *lvt, data) {
                PrimitiveValue::ObjectId(r) => ApduElement::ObjectId(r),
                value => ApduElement::Primitive(value),
            }
        }
        RawTag::Context { number, data } => ApduElement::ContextRaw {
            tag: *number,
            bytes: data.to_vec(),
        },
        RawTag::Opening(n) | RawTag::Closing(n) => ApduElement::ContextRaw {
            tag: *n,
            bytes: Vec::new(),
        },
    }
}

fn push_context(elements: &mut Vec<ApduElement>, tag: u8, data: &[u8]) {
    elements.push(ApduElement::ContextRaw {
        tag,
        bytes: data.to_vec(),
    });
}

/// Collect application-tagged values between `Opening(n)` and `Closing(n)`,
/// labelling each with the property they belong to.
fn wrapped_values(
    cursor: &mut Cursor<'_, '_>,
    number: u8,
    property: Option<u32>,
    elements: &mut Vec<ApduElement>,
) -> bool {
    if !cursor.enter(number) {
        return false;
    }
    loop {
        if cursor.leave(number) {
            return true;
        }
        match cursor.next() {
            Some(RawTag::Application { number: n, lvt, data }) => {
                elements.push(ApduElement::Value {
                    property,
                    value: PrimitiveValue::from_application(*n, *lvt, data),
                });
            }
            Some(token) => elements.push(generic_element(token)),
            None => return true,
        }
    }
}

/// readProperty / writeProperty requests and the readProperty ACK share one
/// positional layout: object id, property id, optional array index, wrapped
/// value, optional priority.
fn property_access(
    cursor: &mut Cursor<'_, '_>,
    pdu_type: PduType,
    has_priority: bool,
) -> Vec<ApduElement> {
    let mut elements = Vec::new();
    let mut property = None;

    if let Some(data) = cursor.take_context(0) {
        match context_object_id(data) {
            Some(r) => elements.push(ApduElement::ObjectId(r)),
            None => push_context(&mut elements, 0, data),
        }
    }
    if let Some(data) = cursor.take_context(1) {
        match be_u64(data) {
            Some(code) => {
                property = Some(code as u32);
                elements.push(ApduElement::PropertyId(code as u32));
            }
            None => push_context(&mut elements, 1, data),
        }
    }
    if let Some(data) = cursor.take_context(2) {
        match be_u64(data) {
            Some(index) => elements.push(ApduElement::ArrayIndex(index)),
            None => push_context(&mut elements, 2, data),
        }
    }
    wrapped_values(cursor, 3, property, &mut elements);
    if has_priority && pdu_type == PduType::ConfirmedReq {
        if let Some(data) = cursor.take_context(4) {
            match be_u64(data) {
                Some(p) => elements.push(ApduElement::Priority(p)),
                None => push_context(&mut elements, 4, data),
            }
        }
    }
    elements
}

/// writePropertyMultiple: a list of write-access specifications, each an
/// object id followed by a bracketed list of property values.
fn write_property_multiple(cursor: &mut Cursor<'_, '_>) -> Vec<ApduElement> {
    let mut elements = Vec::new();
    while let Some(data) = cursor.take_context(0) {
        match context_object_id(data) {
            Some(r) => elements.push(ApduElement::ObjectId(r)),
            None => push_context(&mut elements, 0, data),
        }
        if !cursor.enter(1) {
            continue;
        }
        let mut property = None;
        loop {
            if cursor.leave(1) {
                break;
            }
            if let Some(data) = cursor.take_context(0) {
                match be_u64(data) {
                    Some(code) => {
                        property = Some(code as u32);
                        elements.push(ApduElement::PropertyId(code as u32));
                    }
                    None => push_context(&mut elements, 0, data),
                }
                continue;
            }
            if let Some(data) = cursor.take_context(1) {
                match be_u64(data) {
                    Some(index) => elements.push(ApduElement::ArrayIndex(index)),
                    None => push_context(&mut elements, 1, data),
                }
                continue;
            }
            if wrapped_values(cursor, 2, property, &mut elements) {
                continue;
            }
            if let Some(data) = cursor.take_context(3) {
                match be_u64(data) {
                    Some(p) => elements.push(ApduElement::Priority(p)),
                    None => push_context(&mut elements, 3, data),
                }
                continue;
            }
            match cursor.next() {
                Some(token) => elements.push(generic_element(token)),
                None => break,
            }
        }
    }
    elements
}

/// readPropertyMultiple request and ACK. The ACK nests results under
/// different context numbers than the request's property references.
fn read_property_multiple(cursor: &mut Cursor<'_, '_>, pdu_type: PduType) -> Vec<ApduElement> {
    let is_ack = pdu_type == PduType::ComplexAck;
    let mut elements = Vec::new();
    while let Some(data) = cursor.take_context(0) {
        match context_object_id(data) {
            Some(r) => elements.push(ApduElement::ObjectId(r)),
            None => push_context(&mut elements, 0, data),
        }
        if !cursor.enter(1) {
            continue;
        }
        let mut property = None;
        let (prop_tag, index_tag) = if is_ack { (2, 3) } else { (0, 1) };
        loop {
            if cursor.leave(1) {
                break;
            }
            if let Some(data) = cursor.take_context(prop_tag) {
                match be_u64(data) {
                    Some(code) => {
                        property = Some(code as u32);
                        elements.push(ApduElement::PropertyId(code as u32));
                    }
                    None => push_context(&mut elements, prop_tag, data),
                }
                continue;
            }
            if let Some(data) = cursor.take_context(index_tag) {
                match be_u64(data) {
                    Some(index) => elements.push(ApduElement::ArrayIndex(index)),
                    None => push_context(&mut elements, index_tag, data),
                }
                continue;
            }
            if is_ack && wrapped_values(cursor, 4, property, &mut elements) {
                continue;
            }
            if is_ack && cursor.enter(5) {
                // Per-property access error: class then code.
                let mut seen = 0;
                loop {
                    if cursor.leave(5) {
                        break;
                    }
                    match cursor.next() {
                        Some(RawTag::Application { number: 9, lvt, data }) => {
                            if let PrimitiveValue::Enumerated(v) =
                                PrimitiveValue::from_application(9, *lvt, data)
                            {
                                elements.push(if seen == 0 {
                                    ApduElement::ErrorClass(v)
                                } else {
                                    ApduElement::ErrorCode(v)
                                });
                                seen += 1;
                            }
                        }
                        Some(token) => elements.push(generic_element(token)),
                        None => break,
                    }
                }
                continue;
            }
            match cursor.next() {
                Some(token) => elements.push(generic_element(token)),
                None => break,
            }
        }
    }
    elements
}

fn subscribe_cov(cursor: &mut Cursor<'_, '_>) -> Vec<ApduElement> {
    let mut elements = Vec::new();
    if let Some(data) = cursor.take_context(0) {
        match be_u64(data) {
            Some(v) => elements.push(ApduElement::Primitive(PrimitiveValue::Unsigned(v))),
            None => push_context(&mut elements, 0, data),
        }
    }
    if let Some(data) = cursor.take_context(1) {
        match context_object_id(data) {
            Some(r) => elements.push(ApduElement::ObjectId(r)),
            None => push_context(&mut elements, 1, data),
        }
    }
    if let Some(data) = cursor.take_context(2) {
        let confirmed = data.first().copied().unwrap_or(0) != 0;
        elements.push(ApduElement::Primitive(PrimitiveValue::Boolean(confirmed)));
    }
    if let Some(data) = cursor.take_context(3) {
        match be_u64(data) {
            Some(v) => elements.push(ApduElement::Primitive(PrimitiveValue::Unsigned(v))),
            None => push_context(&mut elements, 3, data),
        }
    }
    elements
}

fn cov_notification(cursor: &mut Cursor<'_, '_>) -> Vec<ApduElement> {
    let mut elements = Vec::new();
    if let Some(data) = cursor.take_context(0) {
        match be_u64(data) {
            Some(v) => elements.push(ApduElement::Primitive(PrimitiveValue::Unsigned(v))),
            None => push_context(&mut elements, 0, data),
        }
    }
    for tag in [1u8, 2u8] {
        if let Some(data) = cursor.take_context(tag) {
            match context_object_id(data) {
                Some(r) => elements.push(ApduElement::ObjectId(r)),
                None => push_context(&mut elements, tag, data),
            }
        }
    }
    if let Some(data) = cursor.take_context(3) {
        match be_u64(data) {
            Some(v) => elements.push(ApduElement::Primitive(PrimitiveValue::Unsigned(v))),
            None => push_context(&mut elements, 3, data),
        }
    }
    if cursor.enter(4) {
        let mut property = None;
        loop {
            if cursor.leave(4) {
                break;
            }
            if let Some(data) = cursor.take_context(0) {
                match be_u64(data) {
                    Some(code) => {
                        property = Some(code as u32);
                        elements.push(ApduElement::PropertyId(code as u32));
                    }
                    None => push_context(&mut elements, 0, data),
                }
                continue;
            }
            if let Some(data) = cursor.take_context(1) {
                match be_u64(data) {
                    Some(index) => elements.push(ApduElement::ArrayIndex(index)),
                    None => push_context(&mut elements, 1, data),
                }
                continue;
            }
            if wrapped_values(cursor, 2, property, &mut elements) {
                continue;
            }
            match cursor.next() {
                Some(token) => elements.push(generic_element(token)),
                None => break,
            }
        }
    }
    elements
}

fn who_is(cursor: &mut Cursor<'_, '_>) -> Vec<ApduElement> {
    let mut elements = Vec::new();
    for tag in [0u8, 1u8] {
        if let Some(data) = cursor.take_context(tag) {
            match be_u64(data) {
                Some(v) => elements.push(ApduElement::Primitive(PrimitiveValue::Unsigned(v))),
                None => push_context(&mut elements, tag, data),
            }
        }
    }
    elements
}

fn who_has(cursor: &mut Cursor<'_, '_>) -> Vec<ApduElement> {
    let mut elements = who_is(cursor);
    if let Some(data) = cursor.take_context(2) {
        match context_object_id(data) {
            Some(r) => elements.push(ApduElement::ObjectId(r)),
            None => push_context(&mut elements, 2, data),
        }
    }
    if let Some(data) = cursor.take_context(3) {
        let text = if data.first() == Some(&0) {
            String::from_utf8_lossy(&data[1..]).into_owned()
        } else {
            String::from_utf8_lossy(data).into_owned()
        };
        elements.push(ApduElement::Primitive(PrimitiveValue::CharacterString(text)));
    }
    elements
}

/// Error bodies carry class then code as enumerated values, sometimes under
/// an opening tag for services with constructed error types.
fn error_elements(cursor: &mut Cursor<'_, '_>) -> Vec<ApduElement> {
    let mut elements = Vec::new();
    let mut seen = 0;
    while let Some(token) = cursor.next() {
        match token {
            RawTag::Application { number: 9, lvt, data } if seen < 2 => {
                if let PrimitiveValue::Enumerated(v) =
                    PrimitiveValue::from_application(9, *lvt, data)
                {
                    elements.push(if seen == 0 {
                        ApduElement::ErrorClass(v)
                    } else {
                        ApduElement::ErrorCode(v)
                    });
                    seen += 1;
                }
            }
            RawTag::Opening(_) | RawTag::Closing(_) => {}
            other => elements.push(generic_element(other)),
        }
    }
    elements
}
