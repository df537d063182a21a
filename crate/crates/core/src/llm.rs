//! Chat-completion backends, sampling settings and the temperature schedule.
//!
//! The core only defines the [`ChatBackend`] trait, the wire body/response
//! shapes and a scripted [`ReplayBackend`]; the HTTP client lives in the std
//! crate.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub num_beams: u32,
    pub max_new_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { temperature: 1.0, top_p: 0.9, top_k: 60, num_beams: 1, max_new_tokens: 512 }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0) {
            return Err(BackendError::Config("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(BackendError::Config("top_p must be in (0, 1]".into()));
        }
        if self.top_k < 1 || self.num_beams < 1 || self.max_new_tokens < 1 {
            return Err(BackendError::Config("top_k, num_beams and max_new_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    #[default]
    Constant,
    LinearDecay,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureSchedule {
    pub mode: ScheduleMode,
    pub start: f64,
    /// Final temperature; only used by [`ScheduleMode::LinearDecay`].
    pub end: f64,
    /// Number of loop iterations the decay spans.
    pub total: usize,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule { mode: ScheduleMode::Constant, start: 1.0, end: 0.4, total: 50 }
    }
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.start >= 0.0) {
            return Err(BackendError::Config("schedule start must be >= 0".into()));
        }
        if self.mode == ScheduleMode::LinearDecay && !(self.start >= self.end && self.end >= 0.0) {
            return Err(BackendError::Config("decay schedule needs start >= end >= 0".into()));
        }
        Ok(())
    }

    /// Temperature for loop iteration `iteration` (0-based). Iterations past
    /// the end hold the final value.
    pub fn temperature_at(&self, iteration: usize) -> f64 {
        match self.mode {
            ScheduleMode::Constant => self.start,
            ScheduleMode::LinearDecay => {
                if self.total <= 1 {
                    return self.start;
                }
                let t = iteration.min(self.total - 1) as f64 / (self.total - 1) as f64;
                self.start + (self.end - self.start) * t
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub sampling: SamplingParams,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub usage: Option<Usage>,
    /// Wall time of the call including retries; `None` when not measured.
    pub latency_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum BackendError {
    #[error("replay script exhausted after {served} responses")]
    Exhausted { served: usize },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    /// Whether a live client should retry after this error.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || (500..600).contains(status),
            _ => false,
        }
    }
}

/// Anything that can answer a chat-completion request.
pub trait ChatBackend {
    fn complete(&mut self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &mut B {
    fn complete(&mut self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for alloc::boxed::Box<B> {
    fn complete(&mut self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }
}

/// Returns scripted responses in order, ignoring the request.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayBackend {
    responses: Vec<String>,
    next: usize,
}

impl ReplayBackend {
    pub fn new(responses: Vec<String>) -> Self {
        ReplayBackend { responses, next: 0 }
    }

    /// Parses a JSON array of strings.
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let responses: Vec<String> =
            serde_json::from_str(text).map_err(|e| BackendError::Config(alloc::format!("replay script: {e}")))?;
        Ok(Self::new(responses))
    }

    pub fn served(&self) -> usize {
        self.next
    }

    pub fn remaining(&self) -> usize {
        self.responses.len() - self.next
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&mut self, _request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let text = self.responses.get(self.next).ok_or(BackendError::Exhausted { served: self.next })?.clone();
        self.next += 1;
        Ok(CompletionResponse { text, usage: None, latency_ms: None })
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: Role,
    content: &'a str,
}

#[derive(Serialize)]
struct WireBody<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_beams: Option<u32>,
}

/// JSON body for `POST <endpoint>/chat/completions`.
///
/// `top_k` and `num_beams` are only sent with `extended` set, since strict
/// servers reject unknown fields.
pub fn wire_body(request: &CompletionRequest, extended: bool) -> String {
    let s = &request.sampling;
    let body = WireBody {
        model: &request.model,
        messages: request.messages.iter().map(|m| WireMessage { role: m.role, content: &m.content }).collect(),
        temperature: s.temperature,
        top_p: s.top_p,
        max_tokens: s.max_new_tokens,
        top_k: extended.then_some(s.top_k),
        num_beams: extended.then_some(s.num_beams),
    };
    serde_json::to_string(&body).unwrap_or_default()
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

/// Reads `choices[0].message.content` from a response body.
pub fn parse_wire_response(body: &str) -> Result<CompletionResponse, BackendError> {
    let parsed: WireResponse = serde_json::from_str(body).map_err(|e| BackendError::Malformed(e.to_string()))?;
    let choice = parsed.choices.into_iter().next().ok_or_else(|| BackendError::Malformed("no choices".into()))?;
    Ok(CompletionResponse {
        text: choice.message.content.unwrap_or_default(),
        usage: parsed.usage.map(|u| Usage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens }),
        latency_ms: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn request() -> CompletionRequest {
        CompletionRequest {
            model: "m".into(),
            messages: vec![Message::user("hi")],
            sampling: SamplingParams::default(),
        }
    }

    #[test]
    fn schedule_examples() {
        let constant = TemperatureSchedule::default();
        assert_eq!(constant.temperature_at(0), 1.0);
        assert_eq!(constant.temperature_at(37), 1.0);
        let decay = TemperatureSchedule { mode: ScheduleMode::LinearDecay, ..Default::default() };
        assert_eq!(decay.temperature_at(0), 1.0);
        assert!((decay.temperature_at(49) - 0.4).abs() < 1e-12);
        assert!((decay.temperature_at(99) - 0.4).abs() < 1e-12);
        let mid = decay.temperature_at(24);
        assert!(mid < 1.0 && mid > 0.4);
        assert!(TemperatureSchedule { end: 1.5, ..decay }.validate().is_err());
    }

    #[test]
    fn sampling_defaults_and_validation() {
        let s = SamplingParams::default();
        assert_eq!((s.temperature, s.top_p, s.top_k, s.num_beams, s.max_new_tokens), (1.0, 0.9, 60, 1, 512));
        assert!(s.validate().is_ok());
        assert!(SamplingParams { top_p: 0.0, ..s }.validate().is_err());
        assert!(SamplingParams { temperature: -0.1, ..s }.validate().is_err());
        assert!(SamplingParams { top_k: 0, ..s }.validate().is_err());
    }

    #[test]
    fn replay_in_order_then_exhausted() {
        let mut b = ReplayBackend::from_json(r#"["f1(x) = c*x", "second"]"#).unwrap();
        assert_eq!(b.complete(&request()).unwrap().text, "f1(x) = c*x");
        assert_eq!(b.complete(&request()).unwrap().text, "second");
        assert_eq!(b.complete(&request()), Err(BackendError::Exhausted { served: 2 }));
        assert!(ReplayBackend::from_json("{}").is_err());
    }

    #[test]
    fn wire_round_trip() {
        let body: serde_json::Value = serde_json::from_str(&wire_body(&request(), false)).unwrap();
        assert_eq!(body["model"], "m");
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(body["max_tokens"], 512);
        assert_eq!(body["top_p"], 0.9);
        assert!(body.get("top_k").is_none());
        let ext: serde_json::Value = serde_json::from_str(&wire_body(&request(), true)).unwrap();
        assert_eq!(ext["top_k"], 60);

        let r = parse_wire_response(r#"{"choices":[{"message":{"role":"assistant","content":"f1(x) = x"}}],"usage":{"prompt_tokens":3,"completion_tokens":4}}"#).unwrap();
        assert_eq!(r.text, "f1(x) = x");
        assert_eq!(r.usage.unwrap().completion_tokens, Some(4));
        assert!(matches!(parse_wire_response(r#"{"choices":[]}"#), Err(BackendError::Malformed(_))));
        assert!(matches!(parse_wire_response("not json"), Err(BackendError::Malformed(_))));
    }

    #[test]
    fn retry_classification() {
        assert!(BackendError::Status { status: 500, body: String::new() }.is_retryable());
        assert!(BackendError::Status { status: 429, body: String::new() }.is_retryable());
        assert!(!BackendError::Status { status: 400, body: String::new() }.is_retryable());
        assert!(BackendError::Transport("reset".into()).is_retryable());
        assert!(!BackendError::Malformed("x".into()).is_retryable());
    }
}
