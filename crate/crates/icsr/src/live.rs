//! HTTP chat-completion client for OpenAI-compatible servers.

use std::thread;
use std::time::{Duration, Instant};

use icsr_core::llm::{
    parse_wire_response, wire_body, BackendError, ChatBackend, CompletionRequest, CompletionResponse,
};
use serde::{Deserialize, Serialize};
use ureq::Agent;

/// Environment variable holding the bearer token.
pub const API_KEY_VAR: &str = "ICSR_API_KEY";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveOptions {
    /// Base URL; requests go to `<endpoint>/chat/completions`.
    pub endpoint: String,
    /// Total attempts per call, including the first.
    pub attempts: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
    pub timeout_s: u64,
    /// Also send `top_k` and `num_beams`, which strict servers reject.
    pub extended_params: bool,
}

impl Default for LiveOptions {
    fn default() -> Self {
        LiveOptions {
            endpoint: "http://localhost:8000/v1".into(),
            attempts: 3,
            backoff_ms: 1000,
            timeout_s: 300,
            extended_params: false,
        }
    }
}

pub struct LiveBackend {
    agent: Agent,
    url: String,
    api_key: String,
    options: LiveOptions,
}

impl LiveBackend {
    /// Reads the key from [`API_KEY_VAR`]; a missing or empty key is a
    /// configuration error.
    pub fn from_env(options: LiveOptions) -> Result<Self, BackendError> {
        match std::env::var(API_KEY_VAR) {
            Ok(key) if !key.is_empty() => Self::new(options, key),
            _ => Err(BackendError::Config(format!("{API_KEY_VAR} is not set"))),
        }
    }

    pub fn new(options: LiveOptions, api_key: String) -> Result<Self, BackendError> {
        if options.attempts == 0 {
            return Err(BackendError::Config("attempts must be >= 1".into()));
        }
        if !options.endpoint.starts_with("http://") && !options.endpoint.starts_with("https://") {
            return Err(BackendError::Config(format!("endpoint '{}' is not an http(s) URL", options.endpoint)));
        }
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(options.timeout_s)))
            .build()
            .into();
        let url = format!("{}/chat/completions", options.endpoint.trim_end_matches('/'));
        Ok(LiveBackend { agent, url, api_key, options })
    }

    fn attempt(&self, body: &str) -> Result<CompletionResponse, BackendError> {
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: text });
        }
        parse_wire_response(&text)
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&mut self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let body = wire_body(request, self.options.extended_params);
        let mut delay = Duration::from_millis(self.options.backoff_ms);
        let mut attempt = 1;
        loop {
            let start = Instant::now();
            match self.attempt(&body) {
                Ok(mut response) => {
                    response.latency_ms = Some(start.elapsed().as_millis() as u64);
                    return Ok(response);
                }
                Err(e) if e.is_retryable() && attempt < self.options.attempts => {
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
