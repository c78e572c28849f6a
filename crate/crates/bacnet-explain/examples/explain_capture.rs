//! The full pipeline on the bundled 19-frame capture: decode, annotate,
//! gather service and retrieval context, dedupe, budget, and summarize.
//!
//! The echo stub stands in for the chat endpoint so this runs offline and
//! deterministically; swap in `HttpChatClient` for a live model.
//!
//! ```bash
//! cargo run --example explain_capture
//! ```

use bacnet_explain::bacnet::decode_packet;
use bacnet_explain::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
use bacnet_explain::context::{dedupe, enforce_budget, gather_context, ContextSources};
use bacnet_explain::registry::{annotate, load_registry_from_str};
use bacnet_explain::retrieval::{chunk_document, ChunkConfig, EmbeddingProvider, HashedBagOfWords, VectorIndex};
use bacnet_explain::samples;
use bacnet_explain::service_kb::ServiceKb;
use bacnet_explain::summarize::{build_prompt, summarize, EchoStubClient, LlmConfig, PromptMode};
use bacnet_explain::render_packet_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Decode and annotate.
    let capture = read_capture(&samples::evaluation_capture())?;
    let registry = load_registry_from_str(samples::DEVICE_REGISTRY_JSON, "demo registry")?;
    let packets: Vec<_> = filter_bacnet(capture.frames, BACNET_IP_PORT)
        .frames
        .iter()
        .map(|frame| Ok(annotate(decode_packet(frame)?, &registry)))
        .collect::<Result<_, bacnet_explain::bacnet::DecodeError>>()?;
    println!("decoded {} packets", packets.len());

    // Context sources: the builtin service KB and an index over the handbook.
    let kb = ServiceKb::builtin();
    let provider = HashedBagOfWords::new(384);
    let mut index = VectorIndex::new(provider.dimension(), provider.id(), 0);
    for chunk in chunk_document(samples::corpus_markdown(), "handbook", &ChunkConfig::default())? {
        if chunk.text.split_whitespace().next().is_none() {
            continue;
        }
        let vector = provider.embed(&chunk.text)?;
        index.push(chunk, vector)?;
    }

    let items = gather_context(
        &packets,
        ContextSources {
            kb: Some(&kb),
            index: Some(&index),
            provider: Some(&provider),
            top_k: 3,
        },
    )?;
    println!("gathered {} context items", items.len());

    let bundle = enforce_budget(dedupe(items), 4096);
    println!(
        "bundle: {} items, ~{} tokens, {} dropped by the budget",
        bundle.items.len(),
        bundle.token_estimate,
        bundle.dropped
    );
    for item in &bundle.items {
        println!("  {:?} (packet {}): {}", item.kind, item.packet_index, trimmed(&item.text));
    }

    // Prompt and summarize through the echo stub.
    let packet_text = render_packet_text(&packets);
    let prompt = build_prompt(&bundle, &packet_text, PromptMode::M4Full);
    let summary = summarize(&prompt, &LlmConfig::default(), &EchoStubClient::default())?;
    println!("\nmodel: {}\nsummary (echoed prompt head):\n{}", summary.model_id, summary.text);
    Ok(())
}

fn trimmed(text: &str) -> String {
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() > 72 {
        let head: String = flat.chars().take(69).collect();
        format!("{head}...")
    } else {
        flat
    }
}
