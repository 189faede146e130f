use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use serde_json::{json, Map, Value};

use crate::codec::count_tokens;
use crate::error::EndpointError;

use super::{ChatMessage, CompletionResult, DecodingParams, EndpointProfile, RepeatPenaltyField};

/// A blocking chat-completion client bound to one endpoint profile.
///
/// Cloning is cheap; clones share the connection pool.
#[derive(Debug, Clone)]
pub struct ChatClient {
    profile: EndpointProfile,
    http: Client,
}

impl ChatClient {
    pub fn new(profile: EndpointProfile) -> Result<Self, EndpointError> {
        let http = Client::builder()
            .timeout(profile.timeout())
            .build()
            .map_err(|e| EndpointError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(ChatClient { profile, http })
    }

    pub fn profile(&self) -> &EndpointProfile {
        &self.profile
    }

    pub fn url(&self) -> String {
        format!(
            "{}/chat/completions",
            self.profile.base_url.trim_end_matches('/')
        )
    }

    /// The JSON body sent for `messages`. Keys serialize in sorted order, so
    /// identical inputs give identical bytes.
    pub fn request_body(&self, params: &DecodingParams, messages: &[ChatMessage]) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), json!(self.profile.model_name));
        body.insert("messages".into(), json!(messages));
        body.insert("max_tokens".into(), json!(params.max_new_tokens));
        body.insert("temperature".into(), json!(params.temperature));
        body.insert("top_p".into(), json!(params.top_p));
        match self.profile.repeat_penalty_field {
            RepeatPenaltyField::RepeatPenalty => {
                body.insert("repeat_penalty".into(), json!(params.repeat_penalty));
            }
            RepeatPenaltyField::RepetitionPenalty => {
                body.insert("repetition_penalty".into(), json!(params.repeat_penalty));
            }
            RepeatPenaltyField::FrequencyPenalty => {
                body.insert(
                    "frequency_penalty".into(),
                    json!(params.repeat_penalty - 1.0),
                );
            }
            RepeatPenaltyField::Omit => {}
        }
        Value::Object(body)
    }

    /// Issues one chat-completion request.
    ///
    /// Transport failures and 5xx responses are retried with exponential
    /// backoff; 4xx responses fail immediately.
    pub fn complete(
        &self,
        params: &DecodingParams,
        messages: &[ChatMessage],
    ) -> Result<CompletionResult, EndpointError> {
        let body = serde_json::to_vec(&self.request_body(params, messages))
            .expect("request body serializes");
        let api_key = match &self.profile.api_key_ref {
            Some(var) => {
                Some(std::env::var(var).map_err(|_| EndpointError::MissingApiKey(var.clone()))?)
            }
            None => None,
        };
        let max_attempts = self.profile.max_retries_on_transport_error + 1;
        let mut delay = Duration::from_millis(self.profile.backoff_ms);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let started = Instant::now();
            let mut request = self
                .http
                .post(self.url())
                .header("content-type", "application/json")
                .body(body.clone());
            if let Some(key) = &api_key {
                request = request.bearer_auth(key);
            }
            let retryable = match request.send() {
                Ok(response) => {
                    let status = response.status();
                    let text = response.text().map_err(|e| EndpointError::Transport {
                        attempts: attempt,
                        message: e.to_string(),
                    });
                    match text {
                        Ok(text) if status.is_success() => {
                            return parse_response(&text, started.elapsed());
                        }
                        Ok(text) if status.is_client_error() => {
                            return Err(EndpointError::Status {
                                status: status.as_u16(),
                                body: text,
                            });
                        }
                        Ok(text) => EndpointError::Status {
                            status: status.as_u16(),
                            body: text,
                        },
                        Err(e) => e,
                    }
                }
                Err(e) => EndpointError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                },
            };
            if attempt >= max_attempts {
                return Err(match retryable {
                    EndpointError::Transport { message, .. } => EndpointError::Transport {
                        attempts: attempt,
                        message,
                    },
                    other => other,
                });
            }
            log::warn!(
                "{} attempt {attempt}/{max_attempts} failed: {retryable}; retrying in {delay:?}",
                self.url()
            );
            thread::sleep(delay);
            delay *= 2;
        }
    }
}

/// One-shot convenience wrapper around [`ChatClient::complete`].
pub fn complete(
    profile: &EndpointProfile,
    params: &DecodingParams,
    messages: &[ChatMessage],
) -> Result<CompletionResult, EndpointError> {
    ChatClient::new(profile.clone())?.complete(params, messages)
}

fn parse_response(text: &str, latency: Duration) -> Result<CompletionResult, EndpointError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| EndpointError::Malformed(e.to_string()))?;
    let message = value
        .pointer("/choices/0/message")
        .ok_or_else(|| EndpointError::Malformed("no choices[0].message".into()))?;
    let content = match message.get("content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => {
            return Err(EndpointError::Malformed(format!(
                "message content is not a string: {other}"
            )))
        }
    };
    let usage_field = |name: &str| {
        value
            .pointer(&format!("/usage/{name}"))
            .and_then(Value::as_u64)
    };
    let (completion_tokens, usage_reported) = match usage_field("completion_tokens") {
        Some(n) => (n, true),
        None => (count_tokens(&content), false),
    };
    Ok(CompletionResult {
        text: content,
        completion_tokens,
        prompt_tokens: usage_field("prompt_tokens").unwrap_or(0),
        usage_reported,
        latency,
    })
}
