//! OpenAI-compatible chat-completion access and the prompts that realize
//! each condition with a real model.

mod client;
mod prompt;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentPolicy, Turn};
use crate::codec::{RawMessage, TokenSource};
use crate::error::{PolicyError, ValidationError};

pub use client::{complete, ChatClient};
pub use prompt::{build_prompt, PromptTemplates, Template};

/// How the repetition penalty is sent to a server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepeatPenaltyField {
    /// `"repeat_penalty": <value>` (llama.cpp, Ollama, vLLM-style servers).
    #[default]
    RepeatPenalty,
    /// `"repetition_penalty": <value>` (TGI / HF-style servers).
    RepetitionPenalty,
    /// `"frequency_penalty": <value - 1>`, the OpenAI additive analogue.
    FrequencyPenalty,
    /// Not sent.
    Omit,
}

/// Where and how to reach one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointProfile {
    /// Base URL up to and including the API version, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_ref: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries_on_transport_error: u32,
    /// First backoff delay; doubles after every failed attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub repeat_penalty_field: RepeatPenaltyField,
}

fn default_timeout_secs() -> f64 {
    60.0
}

fn default_max_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

impl EndpointProfile {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        EndpointProfile {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_ref: None,
            timeout_secs: default_timeout_secs(),
            max_retries_on_transport_error: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            repeat_penalty_field: RepeatPenaltyField::default(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.base_url.trim().is_empty() {
            return Err(ValidationError::Endpoint("base_url is empty".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(ValidationError::Endpoint(format!(
                "timeout_secs must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(())
    }
}

/// Sampling settings forwarded with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub repeat_penalty: f64,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            max_new_tokens: 32,
            temperature: 0.7,
            top_p: 0.9,
            repeat_penalty: 1.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub text: String,
    pub completion_tokens: u64,
    pub prompt_tokens: u64,
    /// False when the response had no usage block and tokens were estimated.
    pub usage_reported: bool,
    pub latency: Duration,
}

impl CompletionResult {
    pub fn into_message(self) -> RawMessage {
        RawMessage {
            text: self.text,
            token_count: self.completion_tokens,
            accounting: if self.usage_reported {
                TokenSource::Endpoint
            } else {
                TokenSource::UsageEstimated
            },
            prompt_tokens: Some(self.prompt_tokens),
        }
    }
}

/// Agent backed by a chat-completion endpoint.
pub struct LlmPolicy {
    client: ChatClient,
    params: DecodingParams,
    templates: Arc<PromptTemplates>,
}

impl LlmPolicy {
    pub fn new(
        client: ChatClient,
        params: DecodingParams,
        templates: Arc<PromptTemplates>,
    ) -> Self {
        LlmPolicy {
            client,
            params,
            templates,
        }
    }

    fn ask(&self, turn: &Turn<'_>, reminder: bool) -> Result<RawMessage, PolicyError> {
        llm_propose(&self.client, &self.params, &self.templates, turn, reminder)
    }
}

/// One prompt/complete cycle; the message carries endpoint token counts.
pub fn llm_propose(
    client: &ChatClient,
    params: &DecodingParams,
    templates: &PromptTemplates,
    turn: &Turn<'_>,
    reminder: bool,
) -> Result<RawMessage, PolicyError> {
    let messages = build_prompt(
        templates,
        turn.condition,
        turn.state,
        turn.lexicon,
        reminder,
    );
    Ok(client.complete(params, &messages)?.into_message())
}

impl AgentPolicy for LlmPolicy {
    fn propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        self.ask(turn, false)
    }

    fn retry_propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        self.ask(turn, true)
    }
}
