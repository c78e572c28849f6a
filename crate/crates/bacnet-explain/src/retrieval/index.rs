//! Exact flat vector index with cosine scoring and a binary on-disk form.
//!
//! Entries keep their insertion order, which doubles as the deterministic
//! tie-break for equal scores. The file layout is fixed: magic `PSIX`,
//! format version, dimension, entry count, embedder id, build timestamp,
//! then the entries; all integers little-endian, vectors as little-endian
//! 32-bit floats.

use std::path::Path;

use super::chunk::Chunk;
use super::RetrievalError;

const MAGIC: &[u8; 4] = b"PSIX";
const FORMAT_VERSION: u16 = 1;

/// A chunk with its embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedChunk {
    pub chunk: Chunk,
    pub vector: Vec<f32>,
}

/// Provenance carried by an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMetadata {
    pub embedder_id: String,
    /// Seconds since the epoch when the index was built.
    pub built_at_unix: u64,
}

/// An in-memory flat index. Build it once, search it from anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<EmbeddedChunk>,
    metadata: IndexMetadata,
}

impl VectorIndex {
    pub fn new(dim: usize, embedder_id: impl Into<String>, built_at_unix: u64) -> Self {
        VectorIndex {
            dim,
            entries: Vec::new(),
            metadata: IndexMetadata {
                embedder_id: embedder_id.into(),
                built_at_unix,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EmbeddedChunk] {
        &self.entries
    }

    pub fn metadata(&self) -> &IndexMetadata {
        &self.metadata
    }

    /// Append an entry. Vectors must match the index dimension, be finite,
    /// and have nonzero norm, so every stored entry is searchable.
    pub fn push(&mut self, chunk: Chunk, vector: Vec<f32>) -> Result<(), RetrievalError> {
        if vector.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFiniteVector);
        }
        if vector.iter().all(|v| *v == 0.0) {
            return Err(RetrievalError::ZeroNorm);
        }
        self.entries.push(EmbeddedChunk { chunk, vector });
        Ok(())
    }
}

/// Cosine similarity in [-1, 1]. Accumulates in f64.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut dot = 0f64;
    let mut norm_a = 0f64;
    let mut norm_b = 0f64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(RetrievalError::ZeroNorm);
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// One search hit. `rank` is 1-based by descending score;
/// `keyword_matches` stays 0 until re-ranking fills it.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub chunk: Chunk,
    pub score: f64,
    pub rank: usize,
    pub keyword_matches: usize,
}

/// Exact top-k by cosine score. Ties go to the earlier-inserted entry. An
/// empty index returns an empty list.
pub fn index_search(
    index: &VectorIndex,
    query: &[f32],
    k: usize,
) -> Result<Vec<RetrievalResult>, RetrievalError> {
    if index.is_empty() {
        return Ok(Vec::new());
    }
    if query.len() != index.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: index.dim(),
            got: query.len(),
        });
    }
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(index.len());
    for (ordinal, entry) in index.entries().iter().enumerate() {
        scored.push((ordinal, cosine_similarity(query, &entry.vector)?));
    }
    scored.sort_by(|(ord_a, score_a), (ord_b, score_b)| {
        score_b
            .partial_cmp(score_a)
            .expect("scores are finite")
            .then(ord_a.cmp(ord_b))
    });
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (ordinal, score))| RetrievalResult {
            chunk: index.entries()[ordinal].chunk.clone(),
            score,
            rank: i + 1,
            keyword_matches: 0,
        })
        .collect())
}

// ---------------------------------------------------------------------------
// On-disk form
// ---------------------------------------------------------------------------

fn put_str(out: &mut Vec<u8>, text: &str) {
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
}

/// Serialize an index to its binary form.
pub fn index_to_bytes(index: &VectorIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim as u32).to_le_bytes());
    out.extend_from_slice(&(index.entries.len() as u64).to_le_bytes());
    put_str(&mut out, &index.metadata.embedder_id);
    out.extend_from_slice(&index.metadata.built_at_unix.to_le_bytes());
    for (ordinal, entry) in index.entries.iter().enumerate() {
        out.extend_from_slice(&entry.chunk.id);
        out.extend_from_slice(&(ordinal as u64).to_le_bytes());
        for value in &entry.vector {
            out.extend_from_slice(&value.to_le_bytes());
        }
        put_str(&mut out, &entry.chunk.text);
        put_str(&mut out, &entry.chunk.source);
        out.extend_from_slice(&(entry.chunk.section_path.len() as u16).to_le_bytes());
        for part in &entry.chunk.section_path {
            put_str(&mut out, part);
        }
        out.extend_from_slice(&(entry.chunk.char_span.0 as u64).to_le_bytes());
        out.extend_from_slice(&(entry.chunk.char_span.1 as u64).to_le_bytes());
    }
    out
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        let slice = self
            .data
            .get(self.pos..self.pos.checked_add(n).ok_or_else(overrun)?)
            .ok_or_else(overrun)?;
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, RetrievalError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, RetrievalError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, RetrievalError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| RetrievalError::CorruptIndex {
            reason: "string is not UTF-8".to_string(),
        })
    }
}

fn overrun() -> RetrievalError {
    RetrievalError::CorruptIndex {
        reason: "file ends before the declared content".to_string(),
    }
}

/// Deserialize an index from its binary form.
pub fn index_from_bytes(data: &[u8]) -> Result<VectorIndex, RetrievalError> {
    let mut reader = ByteReader { data, pos: 0 };
    let magic = reader
        .take(4)
        .map_err(|_| RetrievalError::IncompatibleIndex {
            reason: "file too short for magic".to_string(),
        })?;
    if magic != MAGIC {
        return Err(RetrievalError::IncompatibleIndex {
            reason: format!("magic {magic:02X?} is not PSIX"),
        });
    }
    let version = reader.u16().map_err(|_| RetrievalError::IncompatibleIndex {
        reason: "file too short for version".to_string(),
    })?;
    if version != FORMAT_VERSION {
        return Err(RetrievalError::IncompatibleIndex {
            reason: format!("format version {version}, expected {FORMAT_VERSION}"),
        });
    }
    let dim = reader.u32()? as usize;
    let count = reader.u64()? as usize;
    let embedder_id = reader.string()?;
    let built_at_unix = reader.u64()?;

    let mut index = VectorIndex::new(dim, embedder_id, built_at_unix);
    for expected_ordinal in 0..count {
        let id: [u8; 32] = reader.take(32)?.try_into().unwrap();
        let ordinal = reader.u64()?;
        if ordinal != expected_ordinal as u64 {
            return Err(RetrievalError::CorruptIndex {
                reason: format!("entry {expected_ordinal} carries ordinal {ordinal}"),
            });
        }
        let mut vector = Vec::with_capacity(dim);
        for _ in 0..dim {
            vector.push(f32::from_le_bytes(reader.take(4)?.try_into().unwrap()));
        }
        let text = reader.string()?;
        let source = reader.string()?;
        let path_len = reader.u16()? as usize;
        let mut section_path = Vec::with_capacity(path_len);
        for _ in 0..path_len {
            section_path.push(reader.string()?);
        }
        let start = reader.u64()? as usize;
        let end = reader.u64()? as usize;
        index.entries.push(EmbeddedChunk {
            chunk: Chunk {
                id,
                text,
                source,
                section_path,
                char_span: (start, end),
            },
            vector,
        });
    }
    if reader.pos != data.len() {
        return Err(RetrievalError::CorruptIndex {
            reason: format!("{} trailing bytes after the last entry", data.len() - reader.pos),
        });
    }
    Ok(index)
}

/// Write an index file.
pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), RetrievalError> {
    std::fs::write(path, index_to_bytes(index)).map_err(|source| RetrievalError::Io {
        action: "write",
        path: path.display().to_string(),
        source,
    })
}

/// Read an index file written by [`save_index`].
pub fn load_index(path: &Path) -> Result<VectorIndex, RetrievalError> {
    let data = std::fs::read(path).map_err(|source| RetrievalError::Io {
        action: "read",
        path: path.display().to_string(),
        source,
    })?;
    index_from_bytes(&data)
}
