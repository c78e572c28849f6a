//! Prompt assembly and summary generation through a chat-completion
//! endpoint.
//!
//! One template, four modes: the modes differ only in which context kinds
//! survive into the prompt, which keeps method comparisons controlled. The
//! chat client is an injected trait so nothing here ever needs a live model
//! in tests; the echo stub stands in for one.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::context::{ContextBundle, ContextItem, ContextKind};

/// Which context sources feed the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PromptMode {
    /// No context at all.
    #[serde(rename = "m1")]
    M1NoContext,
    /// Retrieved chunks only.
    #[serde(rename = "m2")]
    M2RagOnly,
    /// Service knowledge-base entries only.
    #[serde(rename = "m3")]
    M3ServiceOnly,
    /// Everything: service, retrieved, and device items.
    #[default]
    #[serde(rename = "m4")]
    M4Full,
}

impl PromptMode {
    pub fn label(&self) -> &'static str {
        match self {
            PromptMode::M1NoContext => "m1",
            PromptMode::M2RagOnly => "m2",
            PromptMode::M3ServiceOnly => "m3",
            PromptMode::M4Full => "m4",
        }
    }

    pub fn parse(text: &str) -> Option<PromptMode> {
        match text {
            "m1" => Some(PromptMode::M1NoContext),
            "m2" => Some(PromptMode::M2RagOnly),
            "m3" => Some(PromptMode::M3ServiceOnly),
            "m4" => Some(PromptMode::M4Full),
            _ => None,
        }
    }

    /// Whether items of this kind enter the prompt under this mode.
    pub fn allows(&self, kind: ContextKind) -> bool {
        match self {
            PromptMode::M1NoContext => false,
            PromptMode::M2RagOnly => kind == ContextKind::Retrieved,
            PromptMode::M3ServiceOnly => kind == ContextKind::Service,
            PromptMode::M4Full => true,
        }
    }

    /// Does this mode need the retrieval index?
    pub fn uses_retrieval(&self) -> bool {
        matches!(self, PromptMode::M2RagOnly | PromptMode::M4Full)
    }

    /// Does this mode need the service knowledge base?
    pub fn uses_service_kb(&self) -> bool {
        matches!(self, PromptMode::M3ServiceOnly | PromptMode::M4Full)
    }
}

impl std::fmt::Display for PromptMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The fixed instruction template, shipped as a data file and hash-pinned
/// in the audit record so summary provenance is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system: String,
    pub task: String,
    raw: &'static str,
}

const TEMPLATE_TEXT: &str = include_str!("../data/prompt_template.txt");

impl PromptTemplate {
    pub fn builtin() -> PromptTemplate {
        let mut system = String::new();
        let mut task = String::new();
        let mut current: Option<&mut String> = None;
        for line in TEMPLATE_TEXT.lines() {
            match line.trim() {
                "[system]" => current = Some(&mut system),
                "[task]" => current = Some(&mut task),
                _ => {
                    if let Some(section) = current.as_deref_mut() {
                        if !section.is_empty() {
                            section.push('\n');
                        }
                        section.push_str(line);
                    }
                }
            }
        }
        PromptTemplate {
            system: system.trim().to_string(),
            task: task.trim().to_string(),
            raw: TEMPLATE_TEXT,
        }
    }

    /// Hex SHA-256 of the template file as shipped.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.raw.as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// A fully rendered prompt, ready to send.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub system_text: String,
    /// The rendered `Context:` section; `Context: (none)` when the mode
    /// admits no items.
    pub context_block: String,
    /// The packet text plus the task instruction.
    pub query_block: String,
    pub mode: PromptMode,
}

impl Prompt {
    /// The single user message: context section, then query section.
    pub fn user_message(&self) -> String {
        format!("{}\n\n{}", self.context_block, self.query_block)
    }
}

/// Render the prompt for a bundle and packet text under a mode. Pure and
/// deterministic; filtering never reorders surviving items.
pub fn build_prompt(bundle: &ContextBundle, packet_text: &str, mode: PromptMode) -> Prompt {
    build_prompt_with_template(bundle, packet_text, mode, &PromptTemplate::builtin())
}

/// [`build_prompt`] with an explicit template.
pub fn build_prompt_with_template(
    bundle: &ContextBundle,
    packet_text: &str,
    mode: PromptMode,
    template: &PromptTemplate,
) -> Prompt {
    let surviving: Vec<&ContextItem> = bundle
        .items
        .iter()
        .filter(|item| mode.allows(item.kind))
        .collect();
    let context_block = if surviving.is_empty() {
        "Context: (none)".to_string()
    } else {
        let mut block = String::from("Context:");
        for item in surviving {
            block.push_str("\n- ");
            block.push_str(&item.text);
        }
        block
    };
    let query_block = format!("Packet file:\n{packet_text}\n\n{}", template.task);
    Prompt {
        system_text: template.system.clone(),
        context_block,
        query_block,
        mode,
    }
}

/// Endpoint configuration for summary generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

fn default_max_tokens() -> u32 {
    512
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_retries() -> u32 {
    2
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_api_key_env() -> String {
    "CHAT_API_KEY".to_string()
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".to_string(),
            model: "mixtral-8x7b-instruct".to_string(),
            // Temperature 0 keeps reruns comparable.
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            timeout_secs: default_timeout_secs(),
            retries: default_retries(),
            retry_backoff_ms: default_backoff_ms(),
            api_key_env: default_api_key_env(),
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            ));
        }
        if self.endpoint.is_empty() {
            return Err("llm endpoint is empty".to_string());
        }
        Ok(())
    }
}

/// Token accounting as reported by the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// A generated packet-file summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    pub model_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
    pub mode: PromptMode,
    pub created_at_unix: u64,
}

/// One chat request in the de-facto chat-completions shape.
#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChatMessage {
    pub role: &'static str,
    pub content: String,
}

/// What a client returns on success.
#[derive(Debug, Clone, Default)]
pub struct ChatOutcome {
    pub content: String,
    pub model_id: Option<String>,
    pub usage: Option<TokenUsage>,
}

/// Errors from summary generation.
#[derive(Debug, Error)]
pub enum ChatError {
    /// Transport-level failure; retried with backoff.
    #[error("chat transport failure: {0}")]
    Transport(String),
    /// The endpoint refused the request; not retried.
    #[error("chat endpoint rejected the request ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("chat endpoint returned an empty completion")]
    EmptyResponse,
    #[error("chat endpoint unavailable after {attempts} attempts: {last}")]
    Unavailable { attempts: u32, last: String },
}

/// A chat-completion backend. Implementations must be safe for concurrent
/// independent requests.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatOutcome, ChatError>;
}

/// Send one summarization request with bounded retries and exponential
/// backoff on transport errors. Issues at most `retries + 1` requests.
pub fn summarize(
    prompt: &Prompt,
    config: &LlmConfig,
    client: &dyn ChatClient,
) -> Result<Summary, ChatError> {
    let request = ChatRequest {
        model: config.model.clone(),
        temperature: config.temperature,
        max_tokens: config.max_tokens,
        messages: vec![
            ChatMessage {
                role: "system",
                content: prompt.system_text.clone(),
            },
            ChatMessage {
                role: "user",
                content: prompt.user_message(),
            },
        ],
    };

    let mut attempt = 0u32;
    let outcome = loop {
        match client.complete(&request) {
            Ok(outcome) => break outcome,
            Err(ChatError::Transport(message)) => {
                attempt += 1;
                if attempt > config.retries {
                    return Err(ChatError::Unavailable {
                        attempts: attempt,
                        last: message,
                    });
                }
                let exponent = (attempt - 1).min(16);
                let delay = config.retry_backoff_ms.saturating_mul(1u64 << exponent);
                std::thread::sleep(std::time::Duration::from_millis(delay));
            }
            Err(other) => return Err(other),
        }
    };

    if outcome.content.trim().is_empty() {
        return Err(ChatError::EmptyResponse);
    }
    Ok(Summary {
        text: outcome.content,
        model_id: outcome.model_id.unwrap_or_else(|| config.model.clone()),
        usage: outcome.usage,
        mode: prompt.mode,
        created_at_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

/// HTTP client for chat-completions endpoints.
pub struct HttpChatClient {
    endpoint: String,
    timeout_secs: u64,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(config: &LlmConfig) -> Result<Self, ChatError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        Ok(HttpChatClient {
            endpoint: config.endpoint.clone(),
            timeout_secs: config.timeout_secs,
            api_key: std::env::var(&config.api_key_env).ok(),
            client,
        })
    }
}

#[derive(Deserialize)]
struct ChatResponseBody {
    #[serde(default)]
    choices: Vec<ChatChoice>,
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    usage: Option<UsageBody>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    #[serde(default)]
    content: String,
}

#[derive(Deserialize)]
struct UsageBody {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatOutcome, ChatError> {
        let _ = self.timeout_secs;
        let mut http = self.client.post(&self.endpoint).json(request);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_client_error() {
            let message = response.text().unwrap_or_default();
            return Err(ChatError::Rejected {
                status: status.as_u16(),
                message,
            });
        }
        if !status.is_success() {
            return Err(ChatError::Transport(format!("status {status}")));
        }
        let body: ChatResponseBody = response
            .json()
            .map_err(|e| ChatError::Transport(format!("unexpected response shape: {e}")))?;
        let first = body.choices.into_iter().next().ok_or(ChatError::EmptyResponse)?;
        Ok(ChatOutcome {
            content: first.message.content,
            model_id: body.model,
            usage: body.usage.map(|u| TokenUsage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
        })
    }
}

/// Offline stand-in for a model: echoes the first words of the user
/// message. Keeps the full pipeline deterministic end to end.
#[derive(Debug, Clone)]
pub struct EchoStubClient {
    pub words: usize,
}

impl Default for EchoStubClient {
    fn default() -> Self {
        EchoStubClient { words: 20 }
    }
}

impl ChatClient for EchoStubClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatOutcome, ChatError> {
        let user = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        let echoed: Vec<&str> = user.split_whitespace().take(self.words).collect();
        Ok(ChatOutcome {
            content: echoed.join(" "),
            model_id: Some("echo-stub".to_string()),
            usage: None,
        })
    }
}
