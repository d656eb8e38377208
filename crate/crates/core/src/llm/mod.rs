//! Chat-completion providers.
//!
//! Every backend implements [`ChatProvider`] and is created by name through a
//! [`ProviderRegistry`]. The built-in kinds are `http` (OpenAI-compatible
//! endpoint), `replay` (canned transcript) and `record` (http, with every
//! exchange appended to a transcript that `replay` can consume later).

mod http;
mod registry;
mod transcript;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::Message;

pub use http::HttpProvider;
pub use registry::{ProviderFactory, ProviderRegistry};
pub use transcript::{load_transcript, parse_transcript, RecordProvider, ReplayProvider, TranscriptEntry};

pub const DEFAULT_API_KEY_ENV: &str = "ASM_LLM_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<Message>,
    /// `None` leaves the provider's default in place.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl CompletionRequest {
    /// All message contents joined with newlines; what replay expectations match against.
    pub fn concatenated(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&m.content);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("transcript exhausted after {consumed} response(s)")]
    TranscriptExhausted { consumed: usize },
    #[error("transcript entry {index} expected the prompt to contain {missing:?}")]
    TranscriptMismatch { index: usize, missing: String },
    #[error("transcript error: {0}")]
    Transcript(String),
    #[error("unknown provider kind '{0}'")]
    UnknownProvider(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;

    /// Providers whose responses depend on call order (transcripts) return
    /// true; callers must then issue requests in a deterministic order.
    fn requires_ordered_calls(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: String,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    pub temperature: Option<f64>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: "http".into(),
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_MODEL.into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            transcript: None,
            temperature: None,
            timeout_secs: 120,
            max_attempts: 3,
            backoff_base_ms: 500,
        }
    }
}

impl ProviderConfig {
    /// Parses the command-line selector: `http:`, `http:URL`, `replay:PATH`
    /// or `record:PATH`.
    pub fn from_selector(selector: &str) -> Result<Self, ProviderError> {
        let (kind, rest) = selector
            .split_once(':')
            .ok_or_else(|| ProviderError::Config(format!("provider selector '{selector}' has no ':'")))?;
        let mut config = Self { kind: kind.to_string(), ..Self::default() };
        match kind {
            "http" => {
                if !rest.is_empty() {
                    config.endpoint = rest.trim_end_matches('/').to_string();
                }
            }
            "replay" | "record" => {
                if rest.is_empty() {
                    return Err(ProviderError::Config(format!("{kind}: needs a transcript path")));
                }
                config.transcript = Some(PathBuf::from(rest));
            }
            other => return Err(ProviderError::UnknownProvider(other.to_string())),
        }
        Ok(config)
    }
}

/// Wraps a provider and counts calls.
pub struct CountingProvider {
    inner: Arc<dyn ChatProvider>,
    calls: AtomicUsize,
}

impl CountingProvider {
    pub fn new(inner: Arc<dyn ChatProvider>) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatProvider for CountingProvider {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }

    fn requires_ordered_calls(&self) -> bool {
        self.inner.requires_ordered_calls()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_parsing() {
        let c = ProviderConfig::from_selector("replay:tx.json").unwrap();
        assert_eq!(c.kind, "replay");
        assert_eq!(c.transcript.as_deref(), Some(std::path::Path::new("tx.json")));
        let c = ProviderConfig::from_selector("http:").unwrap();
        assert_eq!(c.endpoint, DEFAULT_ENDPOINT);
        let c = ProviderConfig::from_selector("http:http://localhost:8080/v1/").unwrap();
        assert_eq!(c.endpoint, "http://localhost:8080/v1");
        assert_eq!(
            ProviderConfig::from_selector("grpc:x"),
            Err(ProviderError::UnknownProvider("grpc".into()))
        );
        assert!(ProviderConfig::from_selector("replay:").is_err());
        assert!(ProviderConfig::from_selector("replay").is_err());
    }
}
