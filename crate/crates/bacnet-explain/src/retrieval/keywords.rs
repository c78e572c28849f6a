//! Keyword extraction and re-ranking of similarity candidates.
//!
//! Similarity alone ranks the top candidates; keyword overlap between the
//! query and each candidate picks the one actually about the same thing.
//! Ties keep the higher-similarity candidate, and when nothing overlaps the
//! rank-1 candidate stands.

use std::collections::BTreeSet;

use super::index::RetrievalResult;
use super::RetrievalError;

/// Fixed English stopword list, versioned with the crate.
const STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "against", "all", "also", "and", "any", "are",
    "because", "been", "before", "being", "below", "between", "both", "but", "can",
    "cannot", "could", "did", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "into", "its", "itself", "just", "more", "most",
    "myself", "nor", "not", "now", "off", "once", "only", "other", "ought", "our",
    "ours", "ourselves", "out", "over", "own", "same", "she", "should", "some", "such",
    "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
    "these", "they", "this", "those", "through", "too", "under", "until", "very",
    "was", "were", "what", "when", "where", "which", "while", "who", "whom", "why",
    "will", "with", "would", "you", "your", "yours", "yourself", "yourselves", "each",
    "may", "might", "must", "shall", "upon", "via", "per", "etc", "e.g", "i.e",
    "one", "two", "use", "used", "uses", "using", "within", "without", "its",
];

fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

fn keep_token(token: &str) -> bool {
    token.chars().count() >= 3
        && !token.chars().all(|c| c.is_ascii_digit())
        && !is_stopword(token)
}

/// Extract the keyword set of a text: case-folded alphanumeric runs, with
/// camelCase runs contributing both their parts and the compound
/// (`writeProperty` yields `write`, `property`, and `writeproperty`).
/// Stopwords, tokens shorter than 3 chars, and purely numeric tokens drop.
pub fn extract_keywords(text: &str) -> BTreeSet<String> {
    let mut keywords = BTreeSet::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let parts = camel_parts(run);
        let compound = run.to_lowercase();
        if parts.len() > 1 {
            for part in parts {
                let part = part.to_lowercase();
                if keep_token(&part) {
                    keywords.insert(part);
                }
            }
        }
        if keep_token(&compound) {
            keywords.insert(compound);
        }
    }
    keywords
}

/// Split a run at transitions from lowercase or digit to uppercase.
fn camel_parts(run: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut prev_lower_or_digit = false;
    for (idx, c) in run.char_indices() {
        if c.is_uppercase() && prev_lower_or_digit {
            parts.push(&run[start..idx]);
            start = idx;
        }
        prev_lower_or_digit = c.is_lowercase() || c.is_ascii_digit();
    }
    parts.push(&run[start..]);
    parts
}

/// Pick the candidate with the most query keywords, breaking ties toward
/// the smallest rank. Fills `keyword_matches` on the winner. Candidates
/// must be non-empty and rank-ordered.
pub fn keyword_rerank(
    apdu_text: &str,
    candidates: Vec<RetrievalResult>,
) -> Result<RetrievalResult, RetrievalError> {
    if candidates.is_empty() {
        return Err(RetrievalError::EmptyCandidates);
    }
    let query_keywords = extract_keywords(apdu_text);
    let mut best: Option<RetrievalResult> = None;
    for mut candidate in candidates {
        let candidate_keywords = extract_keywords(&candidate.chunk.text);
        candidate.keyword_matches = query_keywords.intersection(&candidate_keywords).count();
        let better = match &best {
            None => true,
            Some(current) => candidate.keyword_matches > current.keyword_matches,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("candidates are non-empty"))
}
