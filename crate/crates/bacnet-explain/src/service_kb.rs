//! Service knowledge base: per-service summaries keyed by service name.
//!
//! Whatever retrieval does or does not find, the summarizer always receives
//! the semantics of the services actually present in the capture. Entries
//! are indexed both by normalized name and by (class, code); lookups are
//! value-or-miss, never an error, so packets without a service choice
//! (segment acks, rejects, aborts) flow through untouched.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::bacnet::{DecodedPacket, PduType, ServiceClass};

/// Errors raised while loading a knowledge-base file.
#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read service KB {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("service KB {path} is not valid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("service KB {path}: entries {first} and {second} share name {name:?}")]
    DuplicateName {
        path: String,
        name: String,
        first: usize,
        second: usize,
    },
    #[error("service KB {path}: entries {first} and {second} share ({class}, {code})")]
    DuplicateCode {
        path: String,
        class: &'static str,
        code: u8,
        first: usize,
        second: usize,
    },
    #[error("service KB {path}: entry {index} ({name}) has an empty summary")]
    EmptySummary {
        path: String,
        index: usize,
        name: String,
    },
    #[error("service KB {path}: entry {index} has pdu_class {value:?}, expected \"confirmed\" or \"unconfirmed\"")]
    BadClass {
        path: String,
        index: usize,
        value: String,
    },
}

/// One service's summary record.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceEntry {
    pub service_name: String,
    pub service_code: u8,
    pub pdu_class: ServiceClass,
    pub summary: String,
}

#[derive(Deserialize)]
struct RawEntry {
    service_name: String,
    service_code: u8,
    pdu_class: String,
    summary: String,
}

/// Immutable service lookup table.
#[derive(Debug, Clone, Default)]
pub struct ServiceKb {
    entries: Vec<ServiceEntry>,
    by_name: HashMap<String, usize>,
    by_code: HashMap<(ServiceClass, u8), usize>,
    pub source_path: String,
}

impl ServiceKb {
    /// The knowledge base shipped with the crate, covering every confirmed
    /// (0..=29) and unconfirmed (0..=10) service choice.
    pub fn builtin() -> ServiceKb {
        load_service_kb_from_str(include_str!("../data/service_kb.json"), "builtin")
            .expect("embedded service KB is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ServiceEntry] {
        &self.entries
    }

    pub fn lookup_code(&self, class: ServiceClass, code: u8) -> Option<&ServiceEntry> {
        self.by_code.get(&(class, code)).map(|i| &self.entries[*i])
    }

    pub fn lookup_name(&self, name: &str) -> Option<&ServiceEntry> {
        self.by_name.get(&normalize(name)).map(|i| &self.entries[*i])
    }
}

/// A knowledge-base hit for one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceHit<'a> {
    pub entry: &'a ServiceEntry,
    /// True when the packet is an Error PDU naming this service.
    pub reports_failure: bool,
}

impl ServiceHit<'_> {
    /// The context string handed to the summarizer. Error packets reuse the
    /// service summary plus a fixed failure note.
    pub fn context_text(&self) -> String {
        let mut text = format!("{}: {}", self.entry.service_name, self.entry.summary);
        if self.reports_failure {
            text.push_str(&format!(
                " This packet reports that a {} request failed.",
                self.entry.service_name
            ));
        }
        text
    }
}

/// Case-fold and strip hyphens/underscores, so `who-is`, `whoIs`, and
/// `WHO_IS` all hit the same entry.
fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Load a knowledge base from a JSON file.
pub fn load_service_kb(path: &Path) -> Result<ServiceKb, KbError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
        path: display.clone(),
        source,
    })?;
    load_service_kb_from_str(&text, &display)
}

/// Load a knowledge base from JSON text; `source` names it in errors.
pub fn load_service_kb_from_str(text: &str, source: &str) -> Result<ServiceKb, KbError> {
    let raw: Vec<RawEntry> = serde_json::from_str(text).map_err(|e| KbError::Json {
        path: source.to_string(),
        source: e,
    })?;

    let mut kb = ServiceKb {
        source_path: source.to_string(),
        ..ServiceKb::default()
    };
    for (index, entry) in raw.into_iter().enumerate() {
        let pdu_class = match entry.pdu_class.as_str() {
            "confirmed" => ServiceClass::Confirmed,
            "unconfirmed" => ServiceClass::Unconfirmed,
            other => {
                return Err(KbError::BadClass {
                    path: source.to_string(),
                    index,
                    value: other.to_string(),
                })
            }
        };
        if entry.summary.trim().is_empty() {
            return Err(KbError::EmptySummary {
                path: source.to_string(),
                index,
                name: entry.service_name,
            });
        }
        let key = normalize(&entry.service_name);
        if let Some(first) = kb.by_name.get(&key) {
            return Err(KbError::DuplicateName {
                path: source.to_string(),
                name: entry.service_name,
                first: *first,
                second: index,
            });
        }
        if let Some(first) = kb.by_code.get(&(pdu_class, entry.service_code)) {
            return Err(KbError::DuplicateCode {
                path: source.to_string(),
                class: pdu_class.as_str(),
                code: entry.service_code,
                first: *first,
                second: index,
            });
        }
        kb.by_name.insert(key, index);
        kb.by_code.insert((pdu_class, entry.service_code), index);
        kb.entries.push(ServiceEntry {
            service_name: entry.service_name,
            service_code: entry.service_code,
            pdu_class,
            summary: entry.summary,
        });
    }
    Ok(kb)
}

/// Resolve a packet's service against the knowledge base. Packets without a
/// service choice miss; Error PDUs hit their named service with the failure
/// flag set.
pub fn lookup_service<'a>(kb: &'a ServiceKb, packet: &DecodedPacket) -> Option<ServiceHit<'a>> {
    let choice = packet.apdu.service_choice?;
    let entry = kb.lookup_code(choice.class, choice.code)?;
    Some(ServiceHit {
        entry,
        reports_failure: packet.apdu.pdu_type == PduType::Error,
    })
}
