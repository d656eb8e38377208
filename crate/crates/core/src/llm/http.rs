use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatProvider, CompletionRequest, ProviderConfig, ProviderError};

/// OpenAI-compatible `POST {endpoint}/chat/completions` client.
pub struct HttpProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
}

enum Failure {
    Retryable(String),
    Fatal(ProviderError),
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        if config.max_attempts == 0 {
            return Err(ProviderError::Config("max_attempts must be at least 1".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { config, agent })
    }

    fn api_key(&self) -> Result<String, ProviderError> {
        match std::env::var(&self.config.api_key_env) {
            Ok(key) if !key.trim().is_empty() => Ok(key),
            _ => Err(ProviderError::Auth(format!(
                "environment variable {} is not set",
                self.config.api_key_env
            ))),
        }
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        let mut body = json!({"model": request.model, "messages": messages});
        if let Some(t) = request.temperature {
            body["temperature"] = json!(t);
        }
        body
    }

    fn attempt(&self, url: &str, key: &str, body: &Value) -> Result<String, Failure> {
        let mut response = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body)
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(Failure::Fatal(ProviderError::Auth(format!("HTTP {status}")))),
            429 | 500..=599 => return Err(Failure::Retryable(format!("HTTP {status}: {text}"))),
            _ => {
                return Err(Failure::Fatal(ProviderError::Transport {
                    attempts: 1,
                    message: format!("HTTP {status}: {text}"),
                }))
            }
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Retryable(format!("malformed response body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Failure::Retryable("response has no choices[0].message.content".into()))
    }
}

impl ChatProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let key = self.api_key()?;
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let body = self.body(request);
        tracing::debug!(target: "asmgen::llm", %url, body = %body, "chat completion request");
        let mut last = String::new();
        for attempt in 1..=self.config.max_attempts {
            match self.attempt(&url, &key, &body) {
                Ok(content) => {
                    tracing::debug!(target: "asmgen::llm", attempt, response = %content, "chat completion response");
                    return Ok(content);
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    tracing::warn!(target: "asmgen::llm", attempt, error = %msg, "chat completion failed");
                    last = msg;
                    if attempt < self.config.max_attempts {
                        let delay = self.config.backoff_base_ms.saturating_mul(1 << (attempt - 1));
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(ProviderError::Transport { attempts: self.config.max_attempts, message: last })
    }
}
