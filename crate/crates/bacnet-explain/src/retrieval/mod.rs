//! Retrieval over the protocol-standard corpus: chunking, embedding, an
//! exact flat vector index, and keyword re-ranking of the top candidates.
//!
//! The index is a deliberate flat scan with cosine scores. The corpus is one
//! standard document, so exactness is cheap and it keeps the whole retrieval
//! path checkable against a brute-force oracle.

mod chunk;
mod embed;
mod index;
mod keywords;

pub use chunk::{chunk_document, Chunk, ChunkConfig};
pub use embed::{EmbedError, EmbeddingProvider, HashedBagOfWords, HttpEmbeddingClient, HttpEmbeddingConfig};
pub use index::{
    cosine_similarity, index_from_bytes, index_search, index_to_bytes, load_index, save_index,
    EmbeddedChunk, IndexMetadata, RetrievalResult, VectorIndex,
};
pub use keywords::{extract_keywords, keyword_rerank};

use thiserror::Error;

/// Errors raised by the retrieval stages.
#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid chunking config: max_chunk_chars {max} must exceed overlap_chars {overlap}")]
    InvalidChunkConfig { max: usize, overlap: usize },
    #[error("vector dimension {got} does not match the expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector contains non-finite values")]
    NonFiniteVector,
    #[error("similarity is undefined for zero-norm vectors")]
    ZeroNorm,
    #[error("no candidates to rerank")]
    EmptyCandidates,
    #[error("cannot {action} index {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("incompatible index file: {reason}")]
    IncompatibleIndex { reason: String },
    #[error("corrupt index file: {reason}")]
    CorruptIndex { reason: String },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}
