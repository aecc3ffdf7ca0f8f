use super::{EndpointConfig, RequestParams};
use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
    top_p: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CallError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited (429)")]
    RateLimited,
    #[error("server error {0}")]
    Server(u16),
    #[error("authentication rejected ({0})")]
    Auth(u16),
    #[error("request rejected ({status}): {body}")]
    Client { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Malformed(String),
}

impl CallError {
    /// Transport failures, 429 and 5xx are retried.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            CallError::Transport(_) | CallError::RateLimited | CallError::Server(_)
        )
    }
}

/// Blocking client for `POST {base_url}/chat/completions`.
#[derive(Debug, Clone)]
pub struct ChatClient {
    agent: ureq::Agent,
    url: String,
    model: String,
    token: Option<String>,
}

impl ChatClient {
    pub fn new(cfg: &EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let token = cfg.auth_env.as_ref().and_then(|name| match std::env::var(name) {
            Ok(t) => Some(t),
            Err(_) => {
                log::warn!("auth variable {name} is not set; sending requests without a token");
                None
            }
        });
        Self {
            agent,
            url: format!("{}/chat/completions", cfg.base_url.trim_end_matches('/')),
            model: cfg.model_name.clone(),
            token,
        }
    }

    pub fn complete(&self, messages: &[ChatMessage], params: &RequestParams) -> Result<String, CallError> {
        let body = ChatRequest {
            model: &self.model,
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            top_p: params.top_p,
        };
        let mut req = self.agent.post(&self.url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| CallError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(CallError::Auth(status)),
            429 => return Err(CallError::RateLimited),
            500..=599 => return Err(CallError::Server(status)),
            _ => {
                let body = resp.body_mut().read_to_string().unwrap_or_default();
                return Err(CallError::Client { status, body });
            }
        }
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| CallError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| CallError::Malformed("no choices[0].message.content".into()))
    }
}
