use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::retry::{send_json, RetryPolicy};
use super::ServiceError;

/// The model-backed agents. Each has its own backend configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentRole {
    Formalizer,
    Prover,
    Semantics,
    SearchQuery,
    Decomposer,
}

impl AgentRole {
    pub const ALL: [AgentRole; 5] = [
        AgentRole::Formalizer,
        AgentRole::Prover,
        AgentRole::Semantics,
        AgentRole::SearchQuery,
        AgentRole::Decomposer,
    ];

    /// Configuration section holding this agent's backend settings.
    pub fn section(self) -> &'static str {
        match self {
            AgentRole::Formalizer => "FORMALIZER_AGENT_LLM",
            AgentRole::Prover => "PROVER_AGENT_LLM",
            AgentRole::Semantics => "SEMANTICS_AGENT_LLM",
            AgentRole::SearchQuery => "SEARCH_QUERY_AGENT_LLM",
            AgentRole::Decomposer => "DECOMPOSER_AGENT_LLM",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Formalizer => "formalizer",
            AgentRole::Prover => "prover",
            AgentRole::Semantics => "semantics",
            AgentRole::SearchQuery => "search_query",
            AgentRole::Decomposer => "decomposer",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatBackendConfig {
    pub model: String,
    pub base_url: String,
    pub api_key: String,
    pub max_tokens: u32,
    /// Sent as `max_completion_tokens` instead of `max_tokens` (newer
    /// OpenAI models reject the latter).
    pub completion_tokens_param: bool,
    pub context_window: Option<u32>,
    pub max_remote_retries: u32,
}

#[async_trait]
pub trait ChatClient: Send + Sync {
    async fn complete(&self, role: AgentRole, messages: &[ChatMessage]) -> Result<String, ServiceError>;
}

/// OpenAI-compatible `/chat/completions` client.
pub struct HttpChatClient {
    http: reqwest::Client,
    backends: BTreeMap<AgentRole, ChatBackendConfig>,
    base_delay: Duration,
    timeout: Duration,
}

impl HttpChatClient {
    pub fn new(backends: BTreeMap<AgentRole, ChatBackendConfig>) -> Self {
        Self {
            http: reqwest::Client::new(),
            backends,
            base_delay: Duration::from_secs(1),
            timeout: Duration::from_secs(3600),
        }
    }

    pub fn with_base_delay(mut self, d: Duration) -> Self {
        self.base_delay = d;
        self
    }

    pub fn with_timeout(mut self, d: Duration) -> Self {
        self.timeout = d;
        self
    }

    pub async fn chat_complete(
        &self,
        cfg: &ChatBackendConfig,
        messages: &[ChatMessage],
    ) -> Result<String, ServiceError> {
        if messages.is_empty() {
            return Err(ServiceError::EmptyRequest("chat messages"));
        }
        let url = format!("{}/chat/completions", cfg.base_url.trim_end_matches('/'));
        let tokens_key = if cfg.completion_tokens_param {
            "max_completion_tokens"
        } else {
            "max_tokens"
        };
        let body = json!({
            "model": cfg.model,
            "messages": messages,
            tokens_key: cfg.max_tokens,
        });
        let policy = RetryPolicy {
            base_delay: self.base_delay,
            ..RetryPolicy::new(cfg.max_remote_retries)
        };
        let value = policy
            .run("chat", || {
                let req = self
                    .http
                    .post(&url)
                    .bearer_auth(&cfg.api_key)
                    .timeout(self.timeout)
                    .json(&body);
                send_json("chat", req)
            })
            .await?;
        first_choice_text(&value)
    }
}

fn first_choice_text(value: &serde_json::Value) -> Result<String, ServiceError> {
    value
        .pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_owned)
        .ok_or_else(|| ServiceError::BadResponse {
            service: "chat",
            detail: "response has no choices[0].message.content".into(),
        })
}

#[async_trait]
impl ChatClient for HttpChatClient {
    async fn complete(&self, role: AgentRole, messages: &[ChatMessage]) -> Result<String, ServiceError> {
        let cfg = self.backends.get(&role).ok_or(ServiceError::BadResponse {
            service: "chat",
            detail: format!("no backend configured for {role}"),
        })?;
        self.chat_complete(cfg, messages).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choice_extraction() {
        let v = json!({"choices":[{"message":{"role":"assistant","content":"  hi \n"}}]});
        assert_eq!(first_choice_text(&v).unwrap(), "  hi \n");
        assert!(first_choice_text(&json!({"choices":[]})).is_err());
    }

    #[test]
    fn message_serialization() {
        let m = serde_json::to_value(ChatMessage::user("x")).unwrap();
        assert_eq!(m, json!({"role":"user","content":"x"}));
    }
}
