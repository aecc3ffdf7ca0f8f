//! Administering scale items to OpenAI-compatible chat-completion endpoints
//! under controlled prompt conditions.

mod admin;
mod client;
pub mod mock;
mod parse;
mod prompt;

pub use admin::{administer, AdminError, SessionSummary};
pub use client::{CallError, ChatClient, ChatMessage};
pub use parse::parse_response;
pub use prompt::{render_prompt, render_prompt_with, RenderedPrompt, DEFAULT_MITIGATION, ROLE_PLAY_INSTRUCTION};

use crate::scale::{ScaleRef, ScoredValue};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
}

impl Default for RequestParams {
    fn default() -> Self {
        Self {
            temperature: 0.9,
            max_tokens: 2000,
            top_p: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptCondition {
    Baseline,
    RolePlay,
    DualStrategy,
}

impl FromStr for PromptCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "baseline" => Ok(Self::Baseline),
            "roleplay" => Ok(Self::RolePlay),
            "dualstrategy" | "dual" => Ok(Self::DualStrategy),
            _ => Err(format!("unknown prompt condition '{s}'")),
        }
    }
}

impl fmt::Display for PromptCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Baseline => "baseline",
            Self::RolePlay => "role-play",
            Self::DualStrategy => "dual-strategy",
        })
    }
}

/// Parsed answer of one completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParsedOutcome {
    Scored(ScoredValue),
    Unparseable,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub parallelism: usize,
    pub request_params: RequestParams,
    /// First retry delay; doubles per attempt.
    pub backoff_base_ms: u64,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            auth_env: None,
            timeout_secs: 60,
            max_retries: 5,
            parallelism: 4,
            request_params: RequestParams::default(),
            backoff_base_ms: 1000,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.parallelism < 1 {
            return Err("parallelism must be at least 1".into());
        }
        let t = self.request_params.temperature;
        if !(0.0..=2.0).contains(&t) {
            return Err(format!("temperature {t} outside [0, 2]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub scale_ref: ScaleRef,
    pub condition: PromptCondition,
    pub runs: u32,
    /// Seeds retry jitter only; remote sampling stays stochastic.
    pub seed: u64,
    pub mitigation_text: String,
}

impl SessionPlan {
    pub fn new(scale_ref: ScaleRef, condition: PromptCondition) -> Self {
        Self {
            scale_ref,
            condition,
            runs: 30,
            seed: 0,
            mitigation_text: DEFAULT_MITIGATION.to_string(),
        }
    }
}
