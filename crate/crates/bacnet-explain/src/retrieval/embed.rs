//! Embedding providers behind one deterministic contract.
//!
//! A provider must be a pure function of its input text: the same provider
//! and text always yield the same vector. [`HashedBagOfWords`] is the
//! offline provider used by tests and demos; [`HttpEmbeddingClient`] speaks
//! the common JSON embedding endpoint shape.

use serde::Deserialize;
use thiserror::Error;

/// Errors raised by embedding providers.
#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding input is empty after whitespace normalization")]
    EmptyInput,
    /// Transport-level failure; retryable.
    #[error("embedding transport failure: {0}")]
    Transport(String),
    #[error("embedding endpoint rejected the request: {0}")]
    Rejected(String),
    #[error("embedding has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding contains non-finite values")]
    NonFinite,
}

/// A deterministic text-to-vector encoder with a fixed dimension.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifier stored in index metadata, e.g. `hashed-bow-384`.
    fn id(&self) -> String;

    fn dimension(&self) -> usize;

    /// Embed one text. Must reject input that is empty after whitespace
    /// normalization and must return a finite vector of `dimension()`.
    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Token counts hashed into a fixed number of buckets. Deterministic across
/// runs and platforms, so index builds and pipeline outputs are repeatable
/// without a model endpoint. Texts with disjoint vocabulary embed to
/// orthogonal vectors, absent bucket collisions.
#[derive(Debug, Clone)]
pub struct HashedBagOfWords {
    dimension: usize,
}

impl HashedBagOfWords {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        HashedBagOfWords { dimension }
    }
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        HashedBagOfWords::new(384)
    }
}

/// FNV-1a, fixed here so hashes never drift with the standard library.
fn fnv1a(token: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in token.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

impl EmbeddingProvider for HashedBagOfWords {
    fn id(&self) -> String {
        format!("hashed-bow-{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        if text.split_whitespace().next().is_none() {
            return Err(EmbedError::EmptyInput);
        }
        let mut vector = vec![0f32; self.dimension];
        let mut token = String::new();
        let bump = |token: &mut String, vector: &mut Vec<f32>| {
            if !token.is_empty() {
                let bucket = (fnv1a(token) % self.dimension as u64) as usize;
                vector[bucket] += 1.0;
                token.clear();
            }
        };
        for c in text.chars() {
            if c.is_alphanumeric() {
                token.extend(c.to_lowercase());
            } else {
                bump(&mut token, &mut vector);
            }
        }
        bump(&mut token, &mut vector);
        if vector.iter().all(|v| *v == 0.0) {
            // Input was only punctuation; nothing to key on.
            return Err(EmbedError::EmptyInput);
        }
        Ok(vector)
    }
}

/// Configuration for the HTTP embedding endpoint.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HttpEmbeddingConfig {
    pub endpoint: String,
    pub model: String,
    pub dimension: usize,
    /// Environment variable holding the bearer credential, if any.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_api_key_env() -> String {
    "EMBED_API_KEY".to_string()
}

fn default_timeout_secs() -> u64 {
    60
}

/// Client for endpoints accepting `{"input": [...], "model": "..."}` and
/// answering `{"data": [{"embedding": [...]}]}`.
pub struct HttpEmbeddingClient {
    config: HttpEmbeddingConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
}

impl HttpEmbeddingClient {
    pub fn new(config: HttpEmbeddingConfig) -> Result<Self, EmbedError> {
        let api_key = std::env::var(&config.api_key_env).ok();
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(HttpEmbeddingClient {
            config,
            api_key,
            client,
        })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        for text in texts {
            if text.split_whitespace().next().is_none() {
                return Err(EmbedError::EmptyInput);
            }
        }
        let body = serde_json::json!({
            "input": texts,
            "model": self.config.model,
        });
        let mut request = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_client_error() {
            let text = response.text().unwrap_or_default();
            return Err(EmbedError::Rejected(format!("{status}: {text}")));
        }
        if !status.is_success() {
            return Err(EmbedError::Transport(format!("status {status}")));
        }
        let parsed: EmbeddingResponse = response
            .json()
            .map_err(|e| EmbedError::Transport(format!("unexpected response shape: {e}")))?;
        if parsed.data.len() != texts.len() {
            return Err(EmbedError::Transport(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                parsed.data.len()
            )));
        }
        let mut vectors = Vec::with_capacity(parsed.data.len());
        for datum in parsed.data {
            if datum.embedding.len() != self.config.dimension {
                return Err(EmbedError::DimensionMismatch {
                    expected: self.config.dimension,
                    got: datum.embedding.len(),
                });
            }
            if datum.embedding.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::NonFinite);
            }
            vectors.push(datum.embedding);
        }
        Ok(vectors)
    }
}

impl EmbeddingProvider for HttpEmbeddingClient {
    fn id(&self) -> String {
        format!("http:{}@{}", self.config.model, self.config.endpoint)
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, EmbedError> {
        Ok(self.request(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        self.request(texts)
    }
}
