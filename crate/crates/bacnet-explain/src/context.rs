//! Context assembly: one deduplicated, token-budgeted bundle per capture.
//!
//! For every packet, in capture order, the assembler collects the service
//! knowledge-base entry, the keyword-reranked retrieval chunk, and any
//! device annotations. Duplicate texts collapse to their first occurrence,
//! and a token budget keeps the bundle inside the model's context window,
//! preferring service items over retrieved ones and retrieved over device.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bacnet::DecodedPacket;
use crate::registry::AnnotationKey;
use crate::retrieval::{
    index_search, keyword_rerank, EmbeddingProvider, RetrievalError, VectorIndex,
};
use crate::service_kb::{lookup_service, ServiceKb};

/// Where a context item came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    Service,
    Retrieved,
    Device,
}

impl ContextKind {
    /// Budgeting priority; lower keeps first.
    fn priority(self) -> u8 {
        match self {
            ContextKind::Service => 0,
            ContextKind::Retrieved => 1,
            ContextKind::Device => 2,
        }
    }
}

/// One context string with its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextItem {
    pub kind: ContextKind,
    pub text: String,
    /// Index of the packet this item was gathered for.
    pub packet_index: usize,
    /// Service name, chunk id, or device key that produced the text.
    pub source_id: String,
}

/// The final context handed to the prompt builder.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextBundle {
    pub items: Vec<ContextItem>,
    pub token_estimate: usize,
    pub dropped: usize,
}

/// Errors raised while gathering context.
#[derive(Debug, Error)]
pub enum ContextError {
    #[error("context retrieval failed for packet {packet_index}: {source}")]
    PacketRetrieval {
        packet_index: usize,
        #[source]
        source: RetrievalError,
    },
    #[error("embedding provider dimension {provider_dim} does not match index dimension {index_dim}")]
    ProviderIndexMismatch {
        provider_dim: usize,
        index_dim: usize,
    },
}

/// The lookup sources the gather pass may draw on. Absent sources simply
/// contribute no items, which is how the pipeline modes switch them off.
#[derive(Clone, Copy, Default)]
pub struct ContextSources<'a> {
    pub kb: Option<&'a ServiceKb>,
    pub index: Option<&'a VectorIndex>,
    pub provider: Option<&'a dyn EmbeddingProvider>,
    /// Candidates fetched per packet before re-ranking.
    pub top_k: usize,
}

/// Collect context items for every packet, in packet order: service entry
/// first, then the reranked chunk, then device annotations.
pub fn gather_context(
    packets: &[DecodedPacket],
    sources: ContextSources<'_>,
) -> Result<Vec<ContextItem>, ContextError> {
    if let (Some(index), Some(provider)) = (sources.index, sources.provider) {
        if provider.dimension() != index.dim() {
            return Err(ContextError::ProviderIndexMismatch {
                provider_dim: provider.dimension(),
                index_dim: index.dim(),
            });
        }
    }
    let top_k = if sources.top_k == 0 { 3 } else { sources.top_k };

    let mut items = Vec::new();
    for (packet_index, packet) in packets.iter().enumerate() {
        if let Some(kb) = sources.kb {
            if let Some(hit) = lookup_service(kb, packet) {
                items.push(ContextItem {
                    kind: ContextKind::Service,
                    text: hit.context_text(),
                    packet_index,
                    source_id: hit.entry.service_name.clone(),
                });
            }
        }
        if let (Some(index), Some(provider)) = (sources.index, sources.provider) {
            if !index.is_empty() {
                let query = packet.apdu_text();
                // Packets with nothing decodable have nothing to search on.
                if query.split_whitespace().next().is_some() {
                    let wrap = |source: RetrievalError| ContextError::PacketRetrieval {
                        packet_index,
                        source,
                    };
                    let vector = provider.embed(&query).map_err(|e| wrap(e.into()))?;
                    let candidates = index_search(index, &vector, top_k).map_err(wrap)?;
                    if !candidates.is_empty() {
                        let chosen = keyword_rerank(&query, candidates).map_err(wrap)?;
                        items.push(ContextItem {
                            kind: ContextKind::Retrieved,
                            text: chosen.chunk.text.clone(),
                            packet_index,
                            source_id: chosen.chunk.id_hex(),
                        });
                    }
                }
            }
        }
        for annotation in &packet.annotations {
            let source_id = match &annotation.key {
                AnnotationKey::Object(object) => object.to_string(),
                AnnotationKey::SourceIp(ip) => {
                    format!("src-ip {}.{}.{}.{}", ip[0], ip[1], ip[2], ip[3])
                }
            };
            items.push(ContextItem {
                kind: ContextKind::Device,
                text: annotation.record.context_text(),
                packet_index,
                source_id,
            });
        }
    }
    Ok(items)
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Drop items whose whitespace-normalized text already appeared, keeping
/// first occurrences in order.
pub fn dedupe(items: Vec<ContextItem>) -> Vec<ContextItem> {
    let mut seen = std::collections::HashSet::new();
    items
        .into_iter()
        .filter(|item| seen.insert(normalized(&item.text)))
        .collect()
}

/// Estimated token count of a text: ceil(chars / 4).
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// Keep items while the running token estimate stays within `budget`,
/// walking them in priority order: every service item (in packet order),
/// then retrieved, then device. Items that do not fit are dropped and
/// counted; later smaller items may still fit.
pub fn enforce_budget(items: Vec<ContextItem>, budget: usize) -> ContextBundle {
    let mut ordered = items;
    ordered.sort_by_key(|item| item.kind.priority());

    let mut bundle = ContextBundle::default();
    for item in ordered {
        let cost = estimate_tokens(&item.text);
        if bundle.token_estimate + cost <= budget {
            bundle.token_estimate += cost;
            bundle.items.push(item);
        } else {
            bundle.dropped += 1;
        }
    }
    bundle
}
