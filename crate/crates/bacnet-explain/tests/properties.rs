//! Property tests for the laws the pipeline stages guarantee.

use proptest::collection::vec;
use proptest::prelude::*;

use bacnet_explain::bacnet::{decode_object_identifier, decode_packet, ObjectRef};
use bacnet_explain::capture::{filter_bacnet, RawFrame, BACNET_IP_PORT};
use bacnet_explain::context::{dedupe, enforce_budget, ContextItem, ContextKind};
use bacnet_explain::retrieval::{
    chunk_document, cosine_similarity, extract_keywords, keyword_rerank, Chunk, ChunkConfig,
    RetrievalResult,
};

fn frame(src_port: u16, dst_port: u16, payload: Vec<u8>) -> RawFrame {
    RawFrame {
        index: 0,
        ts_sec: 0,
        ts_usec: 0,
        src_mac: [0; 6],
        dst_mac: [1; 6],
        src_ip: [10, 0, 0, 1],
        dst_ip: [10, 0, 0, 2],
        src_port,
        dst_port,
        payload,
    }
}

proptest! {
    /// Valid-range object identifiers survive the 32-bit round trip.
    #[test]
    fn object_identifier_round_trips(type_code in 0u16..=1023, instance in 0u32..=4_194_302) {
        let reference = ObjectRef::new(type_code, instance);
        let decoded = decode_object_identifier(reference.encoded());
        prop_assert_eq!(decoded, reference);
    }

    /// Decoding arbitrary bytes returns a value or a typed error.
    #[test]
    fn decode_is_total(payload in vec(any::<u8>(), 0..80)) {
        let _ = decode_packet(&frame(47808, 47808, payload));
    }

    /// Filtering twice changes nothing.
    #[test]
    fn bacnet_filter_is_idempotent(
        frames in vec((any::<u16>(), any::<u16>(), vec(any::<u8>(), 0..8)), 0..20)
    ) {
        let frames: Vec<RawFrame> = frames
            .into_iter()
            .map(|(sp, dp, payload)| frame(sp, dp, payload))
            .collect();
        let once = filter_bacnet(frames, BACNET_IP_PORT);
        let twice = filter_bacnet(once.frames.clone(), BACNET_IP_PORT);
        prop_assert_eq!(&once.frames, &twice.frames);
        prop_assert_eq!(twice.dropped, 0);
    }

    /// Cosine similarity is symmetric, bounded, and invariant under
    /// positive scaling.
    #[test]
    fn cosine_laws(
        a in vec(-100.0f32..100.0, 2..12),
        scale in 0.01f32..50.0,
    ) {
        let b: Vec<f32> = a.iter().rev().map(|x| x * 0.5 + 1.0).collect();
        prop_assume!(a.iter().any(|v| *v != 0.0));
        prop_assume!(b.iter().any(|v| *v != 0.0));
        let ab = cosine_similarity(&a, &b).unwrap();
        let ba = cosine_similarity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&ab));
        let scaled: Vec<f32> = a.iter().map(|x| x * scale).collect();
        let scaled_ab = cosine_similarity(&scaled, &b).unwrap();
        prop_assert!((ab - scaled_ab).abs() < 1e-6);
    }

    /// Chunk spans are sorted, tile the document except at declared
    /// overlaps, and stay within the configured size.
    #[test]
    fn chunk_spans_cover_the_document(
        words in vec("[a-z]{1,8}", 0..120),
        max in 20usize..200,
        overlap in 0usize..19,
        headings in 0usize..4,
    ) {
        let mut text = String::new();
        for (i, word) in words.iter().enumerate() {
            if headings > 0 && i > 0 && i % (words.len() / headings + 1).max(8) == 0 {
                text.push_str("\n\n# Heading\n");
            }
            if i > 0 {
                text.push(if i % 11 == 0 { '\n' } else { ' ' });
            }
            text.push_str(word);
            if i % 7 == 3 {
                text.push('.');
            }
        }
        let config = ChunkConfig { max_chunk_chars: max, overlap_chars: overlap };
        let chunks = chunk_document(&text, "doc", &config).unwrap();
        if text.is_empty() {
            prop_assert!(chunks.is_empty());
            return Ok(());
        }
        let total = text.chars().count();
        let mut covered = 0usize;
        for chunk in &chunks {
            let (start, end) = chunk.char_span;
            prop_assert!(start < end);
            prop_assert!(end - start <= max);
            prop_assert!(start <= covered, "gap before ({start}, {end})");
            covered = covered.max(end);
            prop_assert_eq!(chunk.text.chars().count(), end - start);
        }
        prop_assert_eq!(covered, total);
    }

    /// The rerank winner is one of the candidates and no candidate beats
    /// its keyword count.
    #[test]
    fn rerank_winner_is_maximal(
        texts in vec("[a-z ]{0,40}", 1..8),
        query in "[a-z ]{0,40}",
    ) {
        let candidates: Vec<RetrievalResult> = texts
            .iter()
            .enumerate()
            .map(|(i, text)| RetrievalResult {
                chunk: Chunk {
                    id: [i as u8; 32],
                    text: text.clone(),
                    source: "p".to_string(),
                    section_path: Vec::new(),
                    char_span: (0, text.chars().count()),
                },
                score: 1.0 - i as f64 * 0.01,
                rank: i + 1,
                keyword_matches: 0,
            })
            .collect();
        let winner = keyword_rerank(&query, candidates.clone()).unwrap();
        prop_assert!(candidates.iter().any(|c| c.chunk == winner.chunk));
        let query_keywords = extract_keywords(&query);
        for candidate in &candidates {
            let count = query_keywords
                .intersection(&extract_keywords(&candidate.chunk.text))
                .count();
            prop_assert!(count <= winner.keyword_matches);
        }
    }

    /// Dedupe laws and budget laws over arbitrary item lists.
    #[test]
    fn assembly_laws(
        specs in vec((0u8..3, "[a-d ]{0,12}", 0usize..6), 0..25),
        budget in 1usize..60,
    ) {
        let items: Vec<ContextItem> = specs
            .into_iter()
            .enumerate()
            .map(|(i, (kind, text, packet))| ContextItem {
                kind: match kind {
                    0 => ContextKind::Service,
                    1 => ContextKind::Retrieved,
                    _ => ContextKind::Device,
                },
                text,
                packet_index: packet,
                source_id: format!("s{i}"),
            })
            .collect();

        let once = dedupe(items.clone());
        prop_assert_eq!(&dedupe(once.clone()), &once);
        let mut cursor = items.iter();
        for kept in &once {
            prop_assert!(cursor.any(|i| i == kept));
        }

        let bundle = enforce_budget(items.clone(), budget);
        prop_assert!(bundle.token_estimate <= budget);
        prop_assert_eq!(bundle.items.len() + bundle.dropped, items.len());
        for pair in bundle.items.windows(2) {
            prop_assert!(pair[0].kind <= pair[1].kind);
        }
    }
}
