//! Batch triage for BACnet/IP packet captures.
//!
//! This crate decodes BACnet/IP traffic out of classic pcap files, enriches
//! each packet with site device information and protocol context, and turns
//! the whole capture into a natural-language summary through a pluggable
//! chat-completion endpoint. Context comes from two sources: a service
//! knowledge base keyed by BACnet service name, and similarity retrieval
//! over a chunked protocol-standard corpus with keyword re-ranking.
//!
//! The pieces compose as a pipeline:
//!
//! ```text
//! pcap ─▶ capture ─▶ bacnet (decode + render) ─▶ registry (annotate)
//!                                     │
//!          service_kb ──┐             ▼
//!          retrieval ───┴─▶ context ─▶ summarize ─▶ summary text
//! ```
//!
//! Every stage is usable on its own; see the `examples/` directory for one
//! runnable program per capability, and the `pipeline` module for the
//! orchestration the `bacnet-explain` binary exposes as subcommands.

pub mod bacnet;
pub mod capture;
pub mod context;
pub mod eval;
pub mod pipeline;
pub mod registry;
pub mod retrieval;
pub mod samples;
pub mod service_kb;
pub mod summarize;

pub use bacnet::{decode_packet, render_packet_text, DecodedPacket, ObjectRef};
pub use capture::{filter_bacnet, read_capture, RawFrame, BACNET_IP_PORT};
pub use context::{dedupe, enforce_budget, gather_context, ContextBundle, ContextItem};
pub use pipeline::{PipelineConfig, PipelineError};
pub use registry::Registry;
pub use retrieval::{ChunkConfig, VectorIndex};
pub use service_kb::ServiceKb;
pub use summarize::{build_prompt, summarize, Prompt, PromptMode, Summary};
