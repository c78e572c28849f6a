//! Site device registry: who the objects in the traffic actually are.
//!
//! The registry is a hand-maintained JSON file mapping object identifiers
//! to device names and categories. Decoded packets are annotated from it so
//! both the rendered text and the prompt can say "AC-100 Server room
//! temperature setting" instead of "analog-output, 28". Lookups that miss
//! are silent: the data is used only when available.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bacnet::{names, DecodedPacket, ObjectRef};

/// Errors raised while loading a registry file.
#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("registry {path} is not valid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("registry {path}: records {first} and {second} share key ({key})")]
    DuplicateRecord {
        path: String,
        key: String,
        first: usize,
        second: usize,
    },
    #[error("registry {path}: record {index} field {field}: {message}")]
    Validation {
        path: String,
        index: usize,
        field: &'static str,
        message: String,
    },
}

/// One device the site knows about, keyed by object type and instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub object_type: u16,
    pub instance: u32,
    pub name: String,
    pub device_type: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ip: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl DeviceRecord {
    pub fn key(&self) -> ObjectRef {
        ObjectRef::new(self.object_type, self.instance)
    }

    /// One-sentence description used as a device context item.
    pub fn context_text(&self) -> String {
        let mut text = format!(
            "Device {} instance {} is \"{}\" of type {}.",
            names::object_type_name(self.object_type),
            self.instance,
            self.name,
            self.device_type
        );
        if let Some(notes) = &self.notes {
            text.push(' ');
            text.push_str(notes);
        }
        text
    }
}

/// What an annotation was joined on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnotationKey {
    /// An object identifier mentioned in the APDU.
    Object(ObjectRef),
    /// The frame's source IP matched a registry record.
    SourceIp([u8; 4]),
}

/// A registry hit attached to a decoded packet. Strictly additive: the
/// packet's NPDU/APDU fields are never touched.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub key: AnnotationKey,
    pub record: DeviceRecord,
}

/// Immutable device lookup table.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    records: HashMap<ObjectRef, DeviceRecord>,
    by_ip: HashMap<[u8; 4], DeviceRecord>,
    pub source_path: String,
}

impl Registry {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lookup(&self, key: ObjectRef) -> Option<&DeviceRecord> {
        self.records.get(&key)
    }

    pub fn lookup_ip(&self, ip: [u8; 4]) -> Option<&DeviceRecord> {
        self.by_ip.get(&ip)
    }
}

/// The raw JSON shape: `object_type` accepts the standard name or the
/// numeric code.
#[derive(Deserialize)]
struct RawRecord {
    object_type: serde_json::Value,
    instance: i64,
    name: String,
    device_type: String,
    #[serde(default)]
    ip: Option<String>,
    #[serde(default)]
    notes: Option<String>,
}

/// Load a registry from a JSON file.
pub fn load_registry(path: &Path) -> Result<Registry, RegistryError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
        path: display.clone(),
        source,
    })?;
    load_registry_from_str(&text, &display)
}

/// Load a registry from JSON text; `source` names it in errors.
pub fn load_registry_from_str(text: &str, source: &str) -> Result<Registry, RegistryError> {
    let raw: Vec<RawRecord> =
        serde_json::from_str(text).map_err(|e| RegistryError::Json {
            path: source.to_string(),
            source: e,
        })?;

    let mut registry = Registry {
        source_path: source.to_string(),
        ..Registry::default()
    };
    let mut seen: HashMap<ObjectRef, usize> = HashMap::new();

    for (index, raw_record) in raw.into_iter().enumerate() {
        let validation = |field: &'static str, message: String| RegistryError::Validation {
            path: source.to_string(),
            index,
            field,
            message,
        };

        let object_type = match &raw_record.object_type {
            serde_json::Value::String(name) => names::object_type_code(name)
                .ok_or_else(|| validation("object_type", format!("unknown type name {name:?}")))?,
            serde_json::Value::Number(n) => {
                let code = n
                    .as_u64()
                    .filter(|c| *c <= 1023)
                    .ok_or_else(|| validation("object_type", format!("code {n} out of range")))?;
                code as u16
            }
            other => {
                return Err(validation(
                    "object_type",
                    format!("expected name or code, got {other}"),
                ))
            }
        };
        if !(0..=4_194_302).contains(&raw_record.instance) {
            return Err(validation(
                "instance",
                format!("{} out of range", raw_record.instance),
            ));
        }
        let ip_octets = match &raw_record.ip {
            None => None,
            Some(text) => Some(parse_ipv4(text).ok_or_else(|| {
                validation("ip", format!("{text:?} is not a dotted IPv4 address"))
            })?),
        };

        let record = DeviceRecord {
            object_type,
            instance: raw_record.instance as u32,
            name: raw_record.name,
            device_type: raw_record.device_type,
            ip: raw_record.ip,
            notes: raw_record.notes,
        };
        let key = record.key();
        if let Some(first) = seen.insert(key, index) {
            return Err(RegistryError::DuplicateRecord {
                path: source.to_string(),
                key: key.to_string(),
                first,
                second: index,
            });
        }
        if let Some(octets) = ip_octets {
            // First record wins for an IP shared by several entries.
            registry.by_ip.entry(octets).or_insert_with(|| record.clone());
        }
        registry.records.insert(key, record);
    }
    Ok(registry)
}

fn parse_ipv4(text: &str) -> Option<[u8; 4]> {
    let mut octets = [0u8; 4];
    let mut parts = text.split('.');
    for octet in &mut octets {
        *octet = parts.next()?.parse().ok()?;
    }
    parts.next().is_none().then_some(octets)
}

/// Attach registry hits to a packet. Rebuilds the annotation list from
/// scratch, so repeated calls with the same registry are idempotent.
pub fn annotate(packet: DecodedPacket, registry: &Registry) -> DecodedPacket {
    let mut annotations = Vec::new();
    for object in packet.object_refs() {
        if let Some(record) = registry.lookup(object) {
            annotations.push(Annotation {
                key: AnnotationKey::Object(object),
                record: record.clone(),
            });
        }
    }
    if let Some(record) = registry.lookup_ip(packet.frame.src_ip) {
        annotations.push(Annotation {
            key: AnnotationKey::SourceIp(packet.frame.src_ip),
            record: record.clone(),
        });
    }
    DecodedPacket {
        annotations,
        ..packet
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
    use crate::samples;

    fn appendix_packet() -> DecodedPacket {
        let capture = read_capture(&samples::write_property_multiple_capture()).unwrap();
        let frames = filter_bacnet(capture.frames, BACNET_IP_PORT).frames;
        crate::bacnet::decode_packet(&frames[0]).unwrap()
    }

    #[test]
    fn loads_the_appendix_record() {
        let json = r#"[{"object_type": "analog-output", "instance": 28,
            "name": "AC-100 Server room temperature setting",
            "device_type": "AirConditioning"}]"#;
        let registry = load_registry_from_str(json, "test").unwrap();
        assert_eq!(registry.len(), 1);
        let record = registry.lookup(ObjectRef::new(1, 28)).unwrap();
        assert_eq!(record.name, "AC-100 Server room temperature setting");
        assert_eq!(record.device_type, "AirConditioning");
    }

    #[test]
    fn empty_array_is_an_empty_registry() {
        let registry = load_registry_from_str("[]", "test").unwrap();
        assert!(registry.is_empty());
    }

    #[test]
    fn numeric_object_type_codes_are_accepted() {
        let json = r#"[{"object_type": 8, "instance": 126, "name": "BMS", "device_type": "Controller"}]"#;
        let registry = load_registry_from_str(json, "test").unwrap();
        assert!(registry.lookup(ObjectRef::new(8, 126)).is_some());
    }

    #[test]
    fn duplicate_keys_are_rejected_naming_both_entries() {
        let json = r#"[
            {"object_type": "device", "instance": 1, "name": "a", "device_type": "X"},
            {"object_type": 8, "instance": 1, "name": "b", "device_type": "Y"}
        ]"#;
        match load_registry_from_str(json, "test") {
            Err(RegistryError::DuplicateRecord { first: 0, second: 1, .. }) => {}
            other => panic!("expected DuplicateRecord, got {other:?}"),
        }
    }

    #[test]
    fn schema_violations_carry_the_field() {
        let json = r#"[{"object_type": "no-such-thing", "instance": 1, "name": "a", "device_type": "X"}]"#;
        match load_registry_from_str(json, "test") {
            Err(RegistryError::Validation { field: "object_type", index: 0, .. }) => {}
            other => panic!("expected Validation, got {other:?}"),
        }
        let json = r#"[{"object_type": 1, "instance": 9999999, "name": "a", "device_type": "X"}]"#;
        match load_registry_from_str(json, "test") {
            Err(RegistryError::Validation { field: "instance", .. }) => {}
            other => panic!("expected Validation, got {other:?}"),
        }
    }

    #[test]
    fn annotate_attaches_the_appendix_record() {
        let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "test").unwrap();
        let packet = annotate(appendix_packet(), &registry);
        let object_hits: Vec<_> = packet
            .annotations
            .iter()
            .filter(|a| matches!(a.key, AnnotationKey::Object(_)))
            .collect();
        assert_eq!(object_hits.len(), 1);
        assert_eq!(object_hits[0].record.name, "AC-100 Server room temperature setting");
    }

    #[test]
    fn empty_registry_annotates_nothing() {
        let registry = Registry::default();
        let packet = annotate(appendix_packet(), &registry);
        assert!(packet.annotations.is_empty());
    }

    #[test]
    fn annotate_is_idempotent_and_leaves_layers_alone() {
        let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "test").unwrap();
        let original = appendix_packet();
        let once = annotate(original.clone(), &registry);
        let twice = annotate(once.clone(), &registry);
        assert_eq!(once.annotations, twice.annotations);
        assert_eq!(original.npdu, once.npdu);
        assert_eq!(original.apdu, once.apdu);
    }

    #[test]
    fn object_annotations_only_reference_apdu_objects() {
        let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "test").unwrap();
        let packet = annotate(appendix_packet(), &registry);
        let objects = packet.object_refs();
        for annotation in &packet.annotations {
            if let AnnotationKey::Object(key) = &annotation.key {
                assert!(objects.contains(key));
            }
        }
    }

    #[test]
    fn miss_on_one_of_two_objects_yields_one_annotation() {
        let json = r#"[{"object_type": "device", "instance": 126, "name": "BMS", "device_type": "Controller"}]"#;
        let registry = load_registry_from_str(json, "test").unwrap();
        // writeProperty request mentions only device,126; error frame none.
        let capture = read_capture(&samples::write_property_error_capture()).unwrap();
        let frames = filter_bacnet(capture.frames, BACNET_IP_PORT).frames;
        let request = annotate(crate::bacnet::decode_packet(&frames[0]).unwrap(), &registry);
        let error = annotate(crate::bacnet::decode_packet(&frames[1]).unwrap(), &registry);
        assert_eq!(request.annotations.len(), 1);
        assert!(error.annotations.is_empty());
    }
}
