//! Pipeline orchestration: configuration, the audit record, and the four
//! batch operations behind the CLI subcommands.
//!
//! A run is reconstructible from its audit record: the input, config, and
//! prompt template are hash-pinned, the context bundle is serialized, and
//! per-stage timings expose where the time went. With the echo stub in
//! place of a live model, a run is bit-deterministic.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bacnet::{
    decode_packet, render_packet_text_with, DecodeError, DecodedPacket, RenderOptions,
};
use crate::capture::{filter_bacnet, read_capture, CaptureError, RawFrame};
use crate::context::{
    dedupe, enforce_budget, gather_context, ContextBundle, ContextError, ContextSources,
};
use crate::eval::{aggregate, load_ratings, render_table, EvalError, MethodScore};
use crate::registry::{annotate, load_registry, Registry, RegistryError};
use crate::retrieval::{
    chunk_document, save_index, ChunkConfig, EmbedError, EmbeddingProvider, HashedBagOfWords,
    HttpEmbeddingClient, HttpEmbeddingConfig, RetrievalError, VectorIndex,
};
use crate::service_kb::{load_service_kb, KbError, ServiceKb};
use crate::summarize::{
    summarize, ChatClient, ChatError, EchoStubClient, HttpChatClient, LlmConfig, PromptMode,
    PromptTemplate, Summary,
};

/// Which embedding provider a run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provider", rename_all = "kebab-case")]
pub enum EmbeddingConfig {
    /// Deterministic offline hashed bag-of-words.
    HashedBow {
        #[serde(default = "default_dimension")]
        dimension: usize,
    },
    /// HTTP embedding endpoint.
    Http(HttpEmbeddingConfig),
}

fn default_dimension() -> usize {
    384
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::HashedBow {
            dimension: default_dimension(),
        }
    }
}

impl EmbeddingConfig {
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
        match self {
            EmbeddingConfig::HashedBow { dimension } => {
                Ok(Box::new(HashedBagOfWords::new(*dimension)))
            }
            EmbeddingConfig::Http(config) => {
                Ok(Box::new(HttpEmbeddingClient::new(config.clone())?))
            }
        }
    }
}

/// Everything a run needs, loadable from one JSON file with flag overrides.
/// Credentials never live here; they come from environment variables named
/// by the embedding and LLM sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_port")]
    pub bacnet_port: u16,
    #[serde(default)]
    pub registry_path: Option<PathBuf>,
    #[serde(default)]
    pub service_kb_path: Option<PathBuf>,
    #[serde(default)]
    pub index_path: Option<PathBuf>,
    #[serde(default)]
    pub chunking: ChunkConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub mode: PromptMode,
    /// Context window of the configured model, in tokens.
    #[serde(default = "default_window")]
    pub model_window_tokens: usize,
    /// Explicit context budget; defaults to 70% of the model window.
    #[serde(default)]
    pub context_budget_tokens: Option<usize>,
    #[serde(default = "default_top_k")]
    pub retrieval_top_k: usize,
    /// Include per-frame addressing lines in rendered packet text.
    #[serde(default)]
    pub include_link_header: bool,
}

fn default_port() -> u16 {
    crate::capture::BACNET_IP_PORT
}

fn default_window() -> usize {
    8192
}

fn default_top_k() -> usize {
    3
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bacnet_port: default_port(),
            registry_path: None,
            service_kb_path: None,
            index_path: None,
            chunking: ChunkConfig::default(),
            embedding: EmbeddingConfig::default(),
            llm: LlmConfig::default(),
            mode: PromptMode::default(),
            model_window_tokens: default_window(),
            context_budget_tokens: None,
            retrieval_top_k: default_top_k(),
            include_link_header: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            action: "read config",
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::Config(format!("config {}: {e}", path.display()))
        })
    }

    /// The effective context budget in tokens.
    pub fn context_budget(&self) -> usize {
        self.context_budget_tokens
            .unwrap_or(self.model_window_tokens * 7 / 10)
    }

    /// Check the mode's requirements before any file or network access:
    /// m2/m4 need an index path, m3/m4 need a service KB path.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.mode.uses_retrieval() && self.index_path.is_none() {
            return Err(PipelineError::Config(format!(
                "mode {} requires index_path",
                self.mode
            )));
        }
        if self.mode.uses_service_kb() && self.service_kb_path.is_none() {
            return Err(PipelineError::Config(format!(
                "mode {} requires service_kb_path",
                self.mode
            )));
        }
        if self.context_budget() == 0 {
            return Err(PipelineError::Config(
                "context budget must be positive".to_string(),
            ));
        }
        self.llm
            .validate()
            .map_err(PipelineError::Config)?;
        Ok(())
    }

    /// Hex SHA-256 over the canonical JSON serialization. Any field change
    /// changes the hash.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex_sha256(canonical.as_bytes())
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Errors from pipeline operations, classified for the exit-code contract:
/// 1 usage/config, 2 input format, 3 external service.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("embedding failed for {document} chunk {chunk_ordinal}: {source}")]
    KbBuild {
        document: String,
        chunk_ordinal: usize,
        #[source]
        source: EmbedError,
    },
}

impl From<EmbedError> for PipelineError {
    fn from(error: EmbedError) -> Self {
        PipelineError::Retrieval(RetrievalError::Embed(error))
    }
}

impl PipelineError {
    /// Exit code contract: 0 success, 1 usage/config, 2 input format,
    /// 3 external service.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io { .. } => 1,
            PipelineError::Capture(_) | PipelineError::Decode(_) => 2,
            PipelineError::Eval(e) => match e {
                EvalError::Io { .. } => 1,
                _ => 2,
            },
            PipelineError::Registry(e) => match e {
                RegistryError::Io { .. } => 1,
                _ => 2,
            },
            PipelineError::Kb(e) => match e {
                KbError::Io { .. } => 1,
                _ => 2,
            },
            PipelineError::Retrieval(e) => match e {
                RetrievalError::Io { .. } | RetrievalError::InvalidChunkConfig { .. } => 1,
                RetrievalError::Embed(embed) => embed_exit_code(embed),
                _ => 2,
            },
            PipelineError::Context(e) => match e {
                ContextError::ProviderIndexMismatch { .. } => 1,
                ContextError::PacketRetrieval { source, .. } => match source {
                    RetrievalError::Embed(embed) => embed_exit_code(embed),
                    _ => 2,
                },
            },
            PipelineError::Chat(_) => 3,
            PipelineError::KbBuild { source, .. } => embed_exit_code(source),
        }
    }
}

fn embed_exit_code(error: &EmbedError) -> i32 {
    match error {
        EmbedError::Transport(_) | EmbedError::Rejected(_) | EmbedError::NonFinite => 3,
        EmbedError::EmptyInput | EmbedError::DimensionMismatch { .. } => 2,
    }
}

// ---------------------------------------------------------------------------
// Audit record
// ---------------------------------------------------------------------------

/// Per-frame decode outcome kept in the audit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeStatus {
    pub frame_index: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdu_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub stage: String,
    pub error: String,
}

/// The complete provenance of one explain run. Schema-versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub schema_version: u32,
    pub run_id: String,
    pub input_path: String,
    pub input_sha256: String,
    pub config_sha256: String,
    pub prompt_template_sha256: String,
    pub mode: String,
    pub frames_total: usize,
    pub frames_bacnet: usize,
    pub decode_status: Vec<DecodeStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle: Option<ContextBundle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    pub stage_timings_ms: Vec<StageTiming>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureInfo>,
}

pub const AUDIT_SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Decode a capture and return the canonical packet text.
pub fn run_decode(pcap_path: &Path, config: &PipelineConfig) -> Result<String, PipelineError> {
    let bytes = std::fs::read(pcap_path).map_err(|source| PipelineError::Io {
        action: "read capture",
        path: pcap_path.display().to_string(),
        source,
    })?;
    let capture = read_capture(&bytes)?;
    let filtered = filter_bacnet(capture.frames, config.bacnet_port);
    let registry = load_optional_registry(config)?;
    let mut packets = Vec::new();
    for frame in &filtered.frames {
        let packet = decode_packet(frame)?;
        packets.push(match &registry {
            Some(r) => annotate(packet, r),
            None => packet,
        });
    }
    Ok(render_packet_text_with(
        &packets,
        RenderOptions {
            include_link_header: config.include_link_header,
        },
    ))
}

fn load_optional_registry(config: &PipelineConfig) -> Result<Option<Registry>, PipelineError> {
    match &config.registry_path {
        Some(path) => Ok(Some(load_registry(path)?)),
        None => Ok(None),
    }
}

/// What `kb-build` produced.
#[derive(Debug, Clone, Serialize)]
pub struct KbBuildReport {
    pub documents: usize,
    pub chunks: usize,
    pub embedded: usize,
    pub skipped_empty: usize,
    pub dimension: usize,
    pub index_path: String,
}

/// Chunk and embed every text/markdown document under `corpus_dir` and
/// write the index to `out_path`.
pub fn run_kb_build(
    corpus_dir: &Path,
    out_path: &Path,
    config: &PipelineConfig,
) -> Result<KbBuildReport, PipelineError> {
    let mut documents = Vec::new();
    collect_documents(corpus_dir, &mut documents).map_err(|source| PipelineError::Io {
        action: "scan corpus",
        path: corpus_dir.display().to_string(),
        source,
    })?;
    documents.sort();
    if documents.is_empty() {
        return Err(PipelineError::Config(format!(
            "no corpus documents (.md/.txt) under {}",
            corpus_dir.display()
        )));
    }

    let provider = config.embedding.build()?;
    let built_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut index = VectorIndex::new(provider.dimension(), provider.id(), built_at);

    let mut total_chunks = 0usize;
    let mut skipped_empty = 0usize;
    for path in &documents {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            action: "read corpus document",
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let chunks = chunk_document(&text, &name, &config.chunking)?;
        total_chunks += chunks.len();
        for (chunk_ordinal, chunk) in chunks.into_iter().enumerate() {
            if chunk.text.split_whitespace().next().is_none() {
                skipped_empty += 1;
                continue;
            }
            let vector =
                provider
                    .embed(&chunk.text)
                    .map_err(|source| PipelineError::KbBuild {
                        document: name.clone(),
                        chunk_ordinal,
                        source,
                    })?;
            index.push(chunk, vector)?;
        }
    }

    save_index(&index, out_path)?;
    Ok(KbBuildReport {
        documents: documents.len(),
        chunks: total_chunks,
        embedded: index.len(),
        skipped_empty,
        dimension: index.dim(),
        index_path: out_path.display().to_string(),
    })
}

fn collect_documents(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_documents(&path, out)?;
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("md" | "markdown" | "txt")
        ) {
            out.push(path);
        }
    }
    Ok(())
}

/// The result of an explain run. The audit record is always present; on
/// failure it is partial and names the failing stage.
#[derive(Debug)]
pub struct ExplainOutcome {
    pub summary: Option<String>,
    pub audit: AuditRecord,
    pub error: Option<PipelineError>,
}

impl ExplainOutcome {
    pub fn is_success(&self) -> bool {
        self.error.is_none()
    }
}

/// Run the full pipeline on one capture: decode, annotate, gather context,
/// dedupe, budget, build the prompt, and summarize. `client_override`
/// replaces the HTTP chat client (the CLI's `--stub-llm` passes the echo
/// stub).
pub fn run_explain(
    pcap_path: &Path,
    config: &PipelineConfig,
    client_override: Option<&dyn ChatClient>,
) -> ExplainOutcome {
    let template = PromptTemplate::builtin();
    let mut audit = AuditRecord {
        schema_version: AUDIT_SCHEMA_VERSION,
        run_id: new_run_id(),
        input_path: pcap_path.display().to_string(),
        input_sha256: String::new(),
        config_sha256: config.hash(),
        prompt_template_sha256: template.hash(),
        mode: config.mode.label().to_string(),
        frames_total: 0,
        frames_bacnet: 0,
        decode_status: Vec::new(),
        bundle: None,
        summary: None,
        stage_timings_ms: Vec::new(),
        failure: None,
    };

    match explain_stages(pcap_path, config, client_override, &template, &mut audit) {
        Ok(summary_text) => ExplainOutcome {
            summary: Some(summary_text),
            audit,
            error: None,
        },
        Err((stage, error)) => {
            audit.failure = Some(FailureInfo {
                stage: stage.to_string(),
                error: error.to_string(),
            });
            ExplainOutcome {
                summary: None,
                audit,
                error: Some(error),
            }
        }
    }
}

fn new_run_id() -> String {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    format!("run-{nanos:x}")
}

fn explain_stages(
    pcap_path: &Path,
    config: &PipelineConfig,
    client_override: Option<&dyn ChatClient>,
    template: &PromptTemplate,
    audit: &mut AuditRecord,
) -> Result<String, (&'static str, PipelineError)> {
    let fail = |stage: &'static str| move |e: PipelineError| (stage, e);

    config.validate().map_err(fail("config"))?;

    // Decode.
    let started = Instant::now();
    let bytes = std::fs::read(pcap_path)
        .map_err(|source| PipelineError::Io {
            action: "read capture",
            path: pcap_path.display().to_string(),
            source,
        })
        .map_err(fail("decode"))?;
    audit.input_sha256 = hex_sha256(&bytes);
    let capture = read_capture(&bytes)
        .map_err(PipelineError::from)
        .map_err(fail("decode"))?;
    audit.frames_total = capture.frames.len() + capture.skipped.total();
    let filtered = filter_bacnet(capture.frames, config.bacnet_port);
    audit.frames_bacnet = filtered.frames.len();
    let packets = decode_frames(&filtered.frames, &mut audit.decode_status);
    push_timing(audit, "decode", started);

    // Annotate.
    let started = Instant::now();
    let registry = load_optional_registry(config).map_err(fail("annotate"))?;
    let packets: Vec<DecodedPacket> = match &registry {
        Some(r) => packets.into_iter().map(|p| annotate(p, r)).collect(),
        None => packets,
    };
    push_timing(audit, "annotate", started);

    // Gather context under the mode's sources.
    let started = Instant::now();
    let kb: Option<ServiceKb> = if config.mode.uses_service_kb() {
        let path = config.service_kb_path.as_ref().expect("validated");
        Some(load_service_kb(path).map_err(PipelineError::from).map_err(fail("context"))?)
    } else {
        None
    };
    let (index, provider): (Option<VectorIndex>, Option<Box<dyn EmbeddingProvider>>) =
        if config.mode.uses_retrieval() {
            let path = config.index_path.as_ref().expect("validated");
            let index = crate::retrieval::load_index(path)
                .map_err(PipelineError::from)
                .map_err(fail("context"))?;
            let provider = config
                .embedding
                .build()
                .map_err(|e| PipelineError::Retrieval(e.into()))
                .map_err(fail("context"))?;
            (Some(index), Some(provider))
        } else {
            (None, None)
        };
    let items = gather_context(
        &packets,
        ContextSources {
            kb: kb.as_ref(),
            index: index.as_ref(),
            provider: provider.as_deref(),
            top_k: config.retrieval_top_k,
        },
    )
    .map_err(PipelineError::from)
    .map_err(fail("context"))?;
    // The bundle carries only what the mode admits, so audit and prompt agree.
    let items: Vec<_> = items
        .into_iter()
        .filter(|item| config.mode.allows(item.kind))
        .collect();
    push_timing(audit, "context", started);

    // Dedupe and budget.
    let started = Instant::now();
    let bundle = enforce_budget(dedupe(items), config.context_budget());
    audit.bundle = Some(bundle.clone());
    push_timing(audit, "assemble", started);

    // Render and prompt.
    let started = Instant::now();
    let packet_text = render_packet_text_with(
        &packets,
        RenderOptions {
            include_link_header: config.include_link_header,
        },
    );
    let prompt =
        crate::summarize::build_prompt_with_template(&bundle, &packet_text, config.mode, template);
    push_timing(audit, "prompt", started);

    // Summarize.
    let started = Instant::now();
    let http_client;
    let client: &dyn ChatClient = match client_override {
        Some(client) => client,
        None => {
            http_client = HttpChatClient::new(&config.llm)
                .map_err(PipelineError::from)
                .map_err(fail("summarize"))?;
            &http_client
        }
    };
    let summary = summarize(&prompt, &config.llm, client)
        .map_err(PipelineError::from)
        .map_err(fail("summarize"))?;
    push_timing(audit, "summarize", started);

    audit.summary = Some(summary.clone());
    Ok(summary.text)
}

fn decode_frames(frames: &[RawFrame], status: &mut Vec<DecodeStatus>) -> Vec<DecodedPacket> {
    let mut packets = Vec::new();
    for frame in frames {
        match decode_packet(frame) {
            Ok(packet) => {
                status.push(DecodeStatus {
                    frame_index: frame.index,
                    ok: true,
                    pdu_type: Some(packet.apdu.pdu_type.label().to_string()),
                    service: packet
                        .apdu
                        .service_choice
                        .map(|s| s.display_name().to_string()),
                    error: None,
                });
                packets.push(packet);
            }
            Err(error) => status.push(DecodeStatus {
                frame_index: frame.index,
                ok: false,
                pdu_type: None,
                service: None,
                error: Some(error.to_string()),
            }),
        }
    }
    packets
}

fn push_timing(audit: &mut AuditRecord, stage: &str, started: Instant) {
    audit.stage_timings_ms.push(StageTiming {
        stage: stage.to_string(),
        millis: started.elapsed().as_secs_f64() * 1e3,
    });
}

/// Load, aggregate, and render a ratings CSV.
pub fn run_eval(csv_path: &Path) -> Result<(String, Vec<MethodScore>), PipelineError> {
    let records = load_ratings(csv_path)?;
    let scores = aggregate(&records)?;
    Ok((render_table(&scores), scores))
}

/// The echo stub used by `--stub-llm`.
pub fn stub_chat_client() -> EchoStubClient {
    EchoStubClient::default()
}
