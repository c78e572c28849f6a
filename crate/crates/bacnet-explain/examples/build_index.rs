//! Chunk a corpus document, embed the chunks, and persist the index.
//!
//! Uses the deterministic hashed bag-of-words embedder so it runs offline;
//! point `EmbeddingConfig::Http` at a real endpoint for production use.
//!
//! ```bash
//! cargo run --example build_index
//! ```

use bacnet_explain::retrieval::{
    chunk_document, load_index, save_index, ChunkConfig, EmbeddingProvider, HashedBagOfWords,
    VectorIndex,
};
use bacnet_explain::samples;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ChunkConfig::default();
    let chunks = chunk_document(samples::corpus_markdown(), "handbook", &config)?;
    println!("chunked the handbook into {} chunks", chunks.len());
    for chunk in chunks.iter().take(4) {
        println!(
            "  [{}] chars {:>4}..{:<4} {}",
            chunk.section_path.join(" > "),
            chunk.char_span.0,
            chunk.char_span.1,
            &chunk.id_hex()[..12],
        );
    }

    let provider = HashedBagOfWords::new(384);
    let mut index = VectorIndex::new(provider.dimension(), provider.id(), now());
    for chunk in chunks {
        if chunk.text.split_whitespace().next().is_none() {
            continue;
        }
        let vector = provider.embed(&chunk.text)?;
        index.push(chunk, vector)?;
    }
    println!("indexed {} chunks at dimension {}", index.len(), index.dim());

    let path = std::env::temp_dir().join("bacnet-explain-handbook.psix");
    save_index(&index, &path)?;
    let reloaded = load_index(&path)?;
    assert_eq!(reloaded, index);
    println!("round-tripped through {}", path.display());
    Ok(())
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
