//! Chat-completion transports.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(c: impl Into<String>) -> Self {
        Self { role: Role::System, content: c.into() }
    }
    pub fn user(c: impl Into<String>) -> Self {
        Self { role: Role::User, content: c.into() }
    }
    pub fn assistant(c: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: c.into() }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed provider response: {message}")]
    Malformed { message: String, raw_body: String },
    #[error("provider returned status {status}")]
    Status { status: u16, raw_body: String },
    #[error("request timed out")]
    Timeout,
    #[error("missing credential in environment variable `{0}`")]
    MissingToken(String),
}

impl ProviderError {
    fn transient(&self) -> bool {
        match self {
            ProviderError::Transport { .. } | ProviderError::Timeout => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatProvider: Send + Sync {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    2
}
fn default_backoff() -> u64 {
    500
}

/// OpenAI-compatible `/chat/completions` client.
pub struct HttpProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Self { config, agent }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn attempt(&self, body: &Value, token: &str) -> Result<String, ProviderError> {
        let resp = self
            .agent
            .post(&self.config.endpoint)
            .set("Authorization", &format!("Bearer {token}"))
            .send_json(body.clone());
        let resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                return Err(ProviderError::Status {
                    status,
                    raw_body: r.into_string().unwrap_or_default(),
                })
            }
            Err(ureq::Error::Transport(t)) => {
                let message = t.to_string();
                if matches!(t.kind(), ureq::ErrorKind::Io) && message.contains("timed out") {
                    return Err(ProviderError::Timeout);
                }
                return Err(ProviderError::Transport { attempts: 1, message });
            }
        };
        let raw = resp.into_string().map_err(|e| ProviderError::Transport {
            attempts: 1,
            message: e.to_string(),
        })?;
        let parsed: Value = serde_json::from_str(&raw).map_err(|e| ProviderError::Malformed {
            message: e.to_string(),
            raw_body: raw.clone(),
        })?;
        parsed
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or(ProviderError::Malformed {
                message: "no choices[0].message.content".into(),
                raw_body: raw,
            })
    }
}

impl ChatProvider for HttpProvider {
    fn chat(&self, messages: &[ChatMessage]) -> Result<String, ProviderError> {
        let token = std::env::var(&self.config.token_env)
            .map_err(|_| ProviderError::MissingToken(self.config.token_env.clone()))?;
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, &token) {
                Ok(text) => return Ok(text),
                Err(e) if e.transient() && attempts <= self.config.max_retries => {
                    let wait = self.config.backoff_ms.saturating_mul(1 << (attempts - 1).min(16));
                    log::warn!("provider attempt {attempts} failed ({e}); retrying in {wait} ms");
                    std::thread::sleep(Duration::from_millis(wait));
                }
                Err(ProviderError::Transport { message, .. }) => {
                    return Err(ProviderError::Transport { attempts, message })
                }
                Err(e) => return Err(e),
            }
        }
    }
}
