//! Heading-aware document chunking with recursive fallback.
//!
//! Split points are chosen in order of preference: markdown heading
//! boundaries, paragraph breaks, sentence breaks, and finally a hard
//! character limit. Only hard splits overlap; everything else tiles the
//! document, so the spans jointly cover the input.
//!
//! Offsets here are character offsets, not byte offsets, so the limits
//! behave the same for ASCII and non-ASCII corpora.

use sha2::{Digest, Sha256};

use super::RetrievalError;

/// Chunking parameters. `max_chunk_chars` must exceed `overlap_chars`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChunkConfig {
    pub max_chunk_chars: usize,
    pub overlap_chars: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            max_chunk_chars: 1000,
            overlap_chars: 150,
        }
    }
}

/// One retrieval unit cut from a source document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    /// Content hash over (source, char_span, text); 32 bytes.
    pub id: [u8; 32],
    pub text: String,
    /// Document name the chunk came from.
    pub source: String,
    /// Heading trail of the section containing the chunk.
    pub section_path: Vec<String>,
    /// Character offsets `(start, end)` in the source document.
    pub char_span: (usize, usize),
}

impl Chunk {
    pub fn id_hex(&self) -> String {
        self.id.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn chunk_id(source: &str, span: (usize, usize), text: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((source.len() as u64).to_le_bytes());
    hasher.update(source.as_bytes());
    hasher.update((span.0 as u64).to_le_bytes());
    hasher.update((span.1 as u64).to_le_bytes());
    hasher.update(text.as_bytes());
    hasher.finalize().into()
}

/// Char-indexed view of a document, so spans can be sliced cheaply.
struct CharDoc<'a> {
    text: &'a str,
    /// Byte offset of each char, plus a final entry at text.len().
    byte_of_char: Vec<usize>,
}

impl<'a> CharDoc<'a> {
    fn new(text: &'a str) -> Self {
        let mut byte_of_char: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        byte_of_char.push(text.len());
        CharDoc { text, byte_of_char }
    }

    fn char_len(&self) -> usize {
        self.byte_of_char.len() - 1
    }

    fn slice(&self, start: usize, end: usize) -> &'a str {
        &self.text[self.byte_of_char[start]..self.byte_of_char[end]]
    }
}

/// Split `text` into chunks. The empty document yields no chunks.
pub fn chunk_document(
    text: &str,
    source: &str,
    config: &ChunkConfig,
) -> Result<Vec<Chunk>, RetrievalError> {
    if config.max_chunk_chars == 0 || config.max_chunk_chars <= config.overlap_chars {
        return Err(RetrievalError::InvalidChunkConfig {
            max: config.max_chunk_chars,
            overlap: config.overlap_chars,
        });
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }

    let doc = CharDoc::new(text);
    let mut chunks = Vec::new();
    for section in sections(&doc) {
        let mut spans = Vec::new();
        split_block(&doc, section.start, section.end, config, &mut spans);
        for (start, end) in spans {
            let body = doc.slice(start, end).to_string();
            chunks.push(Chunk {
                id: chunk_id(source, (start, end), &body),
                text: body,
                source: source.to_string(),
                section_path: section.path.clone(),
                char_span: (start, end),
            });
        }
    }
    Ok(chunks)
}

struct Section {
    path: Vec<String>,
    start: usize,
    end: usize,
}

/// Cut the document at markdown ATX headings, tracking the heading trail.
/// Content before the first heading becomes a section with an empty path.
fn sections(doc: &CharDoc<'_>) -> Vec<Section> {
    let total = doc.char_len();
    let mut headings: Vec<(usize, usize, String)> = Vec::new(); // (start, level, title)
    let mut line_start = 0usize;
    while line_start < total {
        let mut line_end = line_start;
        while line_end < total && doc.slice(line_end, line_end + 1) != "\n" {
            line_end += 1;
        }
        let line = doc.slice(line_start, line_end);
        if let Some((level, title)) = parse_heading(line) {
            headings.push((line_start, level, title));
        }
        line_start = line_end + 1;
    }

    let mut out = Vec::new();
    if headings.first().map(|(s, _, _)| *s).unwrap_or(total) > 0 {
        let end = headings.first().map(|(s, _, _)| *s).unwrap_or(total);
        out.push(Section {
            path: Vec::new(),
            start: 0,
            end,
        });
    }
    let mut trail: Vec<(usize, String)> = Vec::new();
    for (i, (start, level, title)) in headings.iter().enumerate() {
        trail.retain(|(l, _)| l < level);
        trail.push((*level, title.clone()));
        let end = headings.get(i + 1).map(|(s, _, _)| *s).unwrap_or(total);
        out.push(Section {
            path: trail.iter().map(|(_, t)| t.clone()).collect(),
            start: *start,
            end,
        });
    }
    out
}

fn parse_heading(line: &str) -> Option<(usize, String)> {
    let hashes = line.chars().take_while(|c| *c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &line[hashes..];
    if !rest.starts_with(' ') && !rest.is_empty() {
        return None;
    }
    Some((hashes, rest.trim().to_string()))
}

/// Recursively split [start, end): whole if it fits, else paragraphs, then
/// sentences, then the hard limit with overlap.
fn split_block(
    doc: &CharDoc<'_>,
    start: usize,
    end: usize,
    config: &ChunkConfig,
    out: &mut Vec<(usize, usize)>,
) {
    if end <= start {
        return;
    }
    if end - start <= config.max_chunk_chars {
        out.push((start, end));
        return;
    }
    let paragraphs = paragraph_units(doc, start, end);
    if paragraphs.len() > 1 {
        pack_units(doc, &paragraphs, config, out, sentence_fallback);
        return;
    }
    sentence_fallback(doc, start, end, config, out);
}

fn sentence_fallback(
    doc: &CharDoc<'_>,
    start: usize,
    end: usize,
    config: &ChunkConfig,
    out: &mut Vec<(usize, usize)>,
) {
    if end - start <= config.max_chunk_chars {
        out.push((start, end));
        return;
    }
    let sentences = sentence_units(doc, start, end);
    if sentences.len() > 1 {
        pack_units(doc, &sentences, config, out, hard_split);
        return;
    }
    hard_split(doc, start, end, config, out);
}

fn hard_split(
    _doc: &CharDoc<'_>,
    start: usize,
    end: usize,
    config: &ChunkConfig,
    out: &mut Vec<(usize, usize)>,
) {
    let mut cursor = start;
    loop {
        let piece_end = (cursor + config.max_chunk_chars).min(end);
        out.push((cursor, piece_end));
        if piece_end == end {
            return;
        }
        cursor = piece_end - config.overlap_chars;
    }
}

/// Greedily pack consecutive units into spans no longer than the limit.
/// Units longer than the limit are handed to `oversize`.
fn pack_units(
    doc: &CharDoc<'_>,
    units: &[(usize, usize)],
    config: &ChunkConfig,
    out: &mut Vec<(usize, usize)>,
    oversize: fn(&CharDoc<'_>, usize, usize, &ChunkConfig, &mut Vec<(usize, usize)>),
) {
    let mut open: Option<(usize, usize)> = None;
    for &(unit_start, unit_end) in units {
        if unit_end - unit_start > config.max_chunk_chars {
            if let Some(span) = open.take() {
                out.push(span);
            }
            oversize(doc, unit_start, unit_end, config, out);
            continue;
        }
        match open {
            Some((open_start, _)) if unit_end - open_start <= config.max_chunk_chars => {
                open = Some((open_start, unit_end));
            }
            Some(span) => {
                out.push(span);
                open = Some((unit_start, unit_end));
            }
            None => open = Some((unit_start, unit_end)),
        }
    }
    if let Some(span) = open {
        out.push(span);
    }
}

/// Paragraph units tile [start, end): each ends where the next paragraph's
/// first character begins, so blank-line separators belong to the unit
/// before them.
fn paragraph_units(doc: &CharDoc<'_>, start: usize, end: usize) -> Vec<(usize, usize)> {
    let mut starts = vec![start];
    let mut i = start;
    let mut newline_run = 0usize;
    while i < end {
        if doc.slice(i, i + 1) == "\n" {
            newline_run += 1;
        } else {
            if newline_run >= 2 && starts.last() != Some(&i) {
                starts.push(i);
            }
            newline_run = 0;
        }
        i += 1;
    }
    units_from_starts(&starts, end)
}

/// Sentence units tile [start, end): a boundary follows `.`, `!`, or `?`
/// plus the whitespace run after it.
fn sentence_units(doc: &CharDoc<'_>, start: usize, end: usize) -> Vec<(usize, usize)> {
    let mut starts = vec![start];
    let mut i = start;
    while i < end {
        let c = doc.slice(i, i + 1);
        if c == "." || c == "!" || c == "?" {
            let mut j = i + 1;
            let mut saw_space = false;
            while j < end && doc.slice(j, j + 1).chars().all(char::is_whitespace) {
                saw_space = true;
                j += 1;
            }
            if saw_space && j < end && starts.last() != Some(&j) {
                starts.push(j);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    units_from_starts(&starts, end)
}

fn units_from_starts(starts: &[usize], end: usize) -> Vec<(usize, usize)> {
    starts
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, starts.get(i + 1).copied().unwrap_or(end)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(max: usize, overlap: usize) -> ChunkConfig {
        ChunkConfig {
            max_chunk_chars: max,
            overlap_chars: overlap,
        }
    }

    /// Rebuild the document from spans, dropping declared overlaps.
    fn reconcatenate(text: &str, chunks: &[Chunk]) -> String {
        let chars: Vec<char> = text.chars().collect();
        let mut out = String::new();
        let mut covered = 0usize;
        for chunk in chunks {
            let (start, end) = chunk.char_span;
            assert!(start <= covered, "gap before span ({start}, {end})");
            if end > covered {
                out.extend(&chars[covered..end]);
                covered = end;
            }
        }
        out
    }

    #[test]
    fn short_document_is_one_chunk() {
        let chunks = chunk_document("tiny text.", "doc", &config(1000, 150)).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text, "tiny text.");
        assert_eq!(chunks[0].char_span, (0, 10));
    }

    #[test]
    fn empty_document_yields_no_chunks() {
        assert!(chunk_document("", "doc", &config(1000, 150)).unwrap().is_empty());
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(matches!(
            chunk_document("x", "doc", &config(100, 100)),
            Err(RetrievalError::InvalidChunkConfig { .. })
        ));
        assert!(matches!(
            chunk_document("x", "doc", &config(0, 0)),
            Err(RetrievalError::InvalidChunkConfig { .. })
        ));
    }

    #[test]
    fn hard_splits_cover_with_declared_overlap() {
        // 2500 chars, no headings, no paragraph or sentence breaks.
        let text: String = std::iter::repeat('a').take(2500).collect();
        let chunks = chunk_document(&text, "doc", &config(1000, 150)).unwrap();
        assert_eq!(
            chunks.iter().map(|c| c.char_span).collect::<Vec<_>>(),
            vec![(0, 1000), (850, 1850), (1700, 2500)]
        );
        for pair in chunks.windows(2) {
            assert_eq!(pair[0].char_span.1 - pair[1].char_span.0, 150);
        }
        assert_eq!(reconcatenate(&text, &chunks), text);
    }

    #[test]
    fn three_headings_become_three_chunks_with_paths() {
        let text = "# Alpha\nfirst section body.\n\n# Beta\nsecond section body.\n\n# Gamma\nthird section body.\n";
        let chunks = chunk_document(text, "doc", &config(1000, 150)).unwrap();
        assert_eq!(chunks.len(), 3);
        assert_eq!(chunks[0].section_path, vec!["Alpha"]);
        assert_eq!(chunks[1].section_path, vec!["Beta"]);
        assert_eq!(chunks[2].section_path, vec!["Gamma"]);
        assert!(chunks[0].text.starts_with("# Alpha"));
        assert_eq!(reconcatenate(text, &chunks), text);
    }

    #[test]
    fn nested_headings_produce_a_trail() {
        let text = "# Top\nintro.\n\n## Inner\ndetail.\n";
        let chunks = chunk_document(text, "doc", &config(1000, 150)).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].section_path, vec!["Top"]);
        assert_eq!(chunks[1].section_path, vec!["Top", "Inner"]);
    }

    #[test]
    fn paragraphs_split_before_sentences() {
        let paragraph = "Words repeat here and keep the line going onward. ".repeat(3);
        let text = format!("{0}\n\n{0}\n\n{0}", paragraph.trim_end());
        let chunks = chunk_document(&text, "doc", &config(200, 30)).unwrap();
        assert!(chunks.len() >= 3);
        for chunk in &chunks {
            assert!(chunk.text.chars().count() <= 200);
        }
        assert_eq!(reconcatenate(&text, &chunks), text);
    }

    #[test]
    fn preamble_before_first_heading_has_empty_path() {
        let text = "preamble line.\n\n# Section\nbody.\n";
        let chunks = chunk_document(text, "doc", &config(1000, 150)).unwrap();
        assert_eq!(chunks[0].section_path, Vec::<String>::new());
        assert_eq!(chunks[1].section_path, vec!["Section"]);
    }

    #[test]
    fn ids_are_deterministic_and_distinct() {
        let text = "# A\nbody one.\n\n# B\nbody two.\n";
        let first = chunk_document(text, "doc", &config(1000, 150)).unwrap();
        let second = chunk_document(text, "doc", &config(1000, 150)).unwrap();
        assert_eq!(first, second);
        assert_ne!(first[0].id, first[1].id);
        let other_source = chunk_document(text, "other", &config(1000, 150)).unwrap();
        assert_ne!(first[0].id, other_source[0].id);
    }

    #[test]
    fn handbook_chunks_stay_within_limits_and_cover() {
        let text = crate::samples::corpus_markdown();
        let cfg = config(1000, 150);
        let chunks = chunk_document(text, "handbook", &cfg).unwrap();
        assert!(chunks.len() > 5);
        for chunk in &chunks {
            let len = chunk.text.chars().count();
            assert!((1..=1000).contains(&len));
        }
        assert_eq!(reconcatenate(text, &chunks), text);
    }

    #[test]
    fn multibyte_text_splits_on_char_boundaries() {
        let text = "§".repeat(500);
        let chunks = chunk_document(&text, "doc", &config(200, 50)).unwrap();
        for chunk in &chunks {
            assert!(chunk.text.chars().count() <= 200);
        }
        assert_eq!(reconcatenate(&text, &chunks), text);
    }
}
