//! Retrieve context for one packet: top-3 similarity search, then keyword
//! re-ranking picks the chunk that is actually about the packet's service.
//!
//! ```bash
//! cargo run --example search_corpus
//! ```

use bacnet_explain::bacnet::decode_packet;
use bacnet_explain::capture::{filter_bacnet, read_capture, BACNET_IP_PORT};
use bacnet_explain::retrieval::{
    chunk_document, extract_keywords, index_search, keyword_rerank, ChunkConfig,
    EmbeddingProvider, HashedBagOfWords, VectorIndex,
};
use bacnet_explain::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let provider = HashedBagOfWords::new(384);
    let mut index = VectorIndex::new(provider.dimension(), provider.id(), 0);
    for chunk in chunk_document(samples::corpus_markdown(), "handbook", &ChunkConfig::default())? {
        if chunk.text.split_whitespace().next().is_none() {
            continue;
        }
        let vector = provider.embed(&chunk.text)?;
        index.push(chunk, vector)?;
    }

    let capture = read_capture(&samples::write_property_multiple_capture())?;
    let frame = &filter_bacnet(capture.frames, BACNET_IP_PORT).frames[0];
    let packet = decode_packet(frame)?;
    let query = packet.apdu_text();
    println!("query (the packet's APDU text):\n{query}\n");
    println!("query keywords: {:?}\n", extract_keywords(&query));

    let candidates = index_search(&index, &provider.embed(&query)?, 3)?;
    for candidate in &candidates {
        println!(
            "rank {} score {:.4} [{}]",
            candidate.rank,
            candidate.score,
            candidate.chunk.section_path.join(" > "),
        );
    }

    let chosen = keyword_rerank(&query, candidates)?;
    println!(
        "\nchosen: rank {} with {} keyword matches\n---\n{}",
        chosen.rank,
        chosen.keyword_matches,
        chosen.chunk.text.trim()
    );
    Ok(())
}
