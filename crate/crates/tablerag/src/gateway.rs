//! Chat-completion client used for enrichment and answer generation.
//!
//! One retry/backoff engine drives every backend: live HTTP, a scripted
//! deterministic mock, and record/replay transcripts for network-free
//! reproduction of full runs. Backends are keyed by a canonical request
//! digest so identical requests are recognized across processes.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finish {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
    pub finish: Finish,
}

/// Connection settings plus retry policy.
#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token;
    /// empty means the endpoint needs no auth.
    pub auth_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// First backoff delay in seconds; doubles per subsequent retry.
    pub backoff_base_secs: f64,
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            auth_env: String::new(),
            timeout_secs: 30.0,
            max_retries: 3,
            backoff_base_secs: 1.0,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("authentication rejected (HTTP {status})")]
    AuthError { status: u16 },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("server error HTTP {status} after {attempts} attempts")]
    ServerError { status: u16, attempts: u32 },
    #[error("request rejected (HTTP {status}): {detail}")]
    Rejected { status: u16, detail: String },
    #[error("connection failed after {attempts} attempts: {detail}")]
    Connection { attempts: u32, detail: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("no script entry for request digest {digest}")]
    NoScriptEntry { digest: String },
    #[error("transcript has no record for request digest {digest}")]
    TranscriptMiss { digest: String },
    #[error("transcript file {path}: {detail}")]
    TranscriptFile { path: PathBuf, detail: String },
    #[error("auth token environment variable {0} is not set")]
    MissingAuthToken(String),
}

/// Stable hex digest of a request: model, decoding settings, and every
/// message, joined with unit/record separators before hashing.
pub fn request_digest(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(request.model_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(format!("{}", request.temperature).as_bytes());
    hasher.update([0x1f]);
    hasher.update(format!("{}", request.max_tokens).as_bytes());
    hasher.update([0x1e]);
    for message in &request.messages {
        hasher.update(message.role.as_str().as_bytes());
        hasher.update([0x1f]);
        hasher.update(message.content.as_bytes());
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

fn validate_request(request: &ChatRequest) -> Result<(), GatewayError> {
    if request.messages.is_empty() {
        return Err(GatewayError::InvalidRequest("no messages".into()));
    }
    if request.messages[0].role == Role::Assistant {
        return Err(GatewayError::InvalidRequest(
            "first message must be system or user".into(),
        ));
    }
    for message in &request.messages {
        if matches!(message.role, Role::System | Role::User) && message.content.is_empty() {
            return Err(GatewayError::InvalidRequest(format!(
                "{} message has empty content",
                message.role.as_str()
            )));
        }
    }
    if !(0.0..=2.0).contains(&request.temperature) {
        return Err(GatewayError::InvalidRequest(format!(
            "temperature {} outside [0, 2]",
            request.temperature
        )));
    }
    if request.max_tokens == 0 {
        return Err(GatewayError::InvalidRequest("max_tokens must be > 0".into()));
    }
    Ok(())
}

/// What one wire exchange produced, before retry interpretation.
#[derive(Debug, Clone)]
pub enum TransportReply {
    /// HTTP status and response body.
    Status(u16, String),
    TimedOut,
    ConnError(String),
}

/// One HTTP exchange; implementations must be shareable across threads.
pub trait Transport: Send + Sync {
    fn send(&self, config: &GatewayConfig, auth_token: &str, body: &str) -> TransportReply;
}

/// Live transport over blocking HTTP.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout_secs: f64) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(timeout_secs))
            .build()
            .expect("client construction has no runtime inputs");
        Self { client }
    }
}

impl Transport for HttpTransport {
    fn send(&self, config: &GatewayConfig, auth_token: &str, body: &str) -> TransportReply {
        let mut builder = self
            .client
            .post(&config.endpoint)
            .header("content-type", "application/json")
            .body(body.to_string());
        if !auth_token.is_empty() {
            builder = builder.bearer_auth(auth_token);
        }
        match builder.send() {
            Ok(resp) => {
                let status = resp.status().as_u16();
                match resp.text() {
                    Ok(text) => TransportReply::Status(status, text),
                    Err(e) => TransportReply::ConnError(e.to_string()),
                }
            }
            Err(e) if e.is_timeout() => TransportReply::TimedOut,
            Err(e) => TransportReply::ConnError(e.to_string()),
        }
    }
}

fn wire_body(request: &ChatRequest) -> String {
    let messages: Vec<serde_json::Value> = request
        .messages
        .iter()
        .map(|m| serde_json::json!({"role": m.role.as_str(), "content": m.content}))
        .collect();
    serde_json::json!({
        "model": request.model_id,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    })
    .to_string()
}

fn parse_wire_response(body: &str) -> Result<ChatResponse, GatewayError> {
    let v: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::MalformedResponse(format!("not JSON: {e}")))?;
    let content = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| {
            GatewayError::MalformedResponse("choices[0].message.content missing".into())
        })?
        .to_string();
    let finish = match v["choices"][0]["finish_reason"].as_str() {
        Some("length") => Finish::Length,
        Some("error") => Finish::Error,
        _ => Finish::Stop,
    };
    if content.is_empty() && finish != Finish::Error {
        return Err(GatewayError::MalformedResponse(
            "empty content without error finish".into(),
        ));
    }
    Ok(ChatResponse {
        content,
        prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0) as u32,
        completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0) as u32,
        finish,
    })
}

/// Backoff before retry number `retry` (0-based): base × 2^retry.
pub fn backoff_delay(config: &GatewayConfig, retry: u32) -> Duration {
    Duration::from_secs_f64(config.backoff_base_secs * f64::from(1u32 << retry.min(16)))
}

/// Send with retries: transient failures (timeout, connection, HTTP 429
/// and 5xx) back off exponentially up to `max_retries` further attempts;
/// auth and other client errors return immediately.
pub fn complete(
    config: &GatewayConfig,
    transport: &dyn Transport,
    auth_token: &str,
    request: &ChatRequest,
) -> Result<ChatResponse, GatewayError> {
    validate_request(request)?;
    let body = wire_body(request);
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        // Transient failures fall through to the retry decision; everything
        // else returns right here.
        let transient: GatewayError = match transport.send(config, auth_token, &body) {
            TransportReply::Status(status, text) => match status {
                200..=299 => return parse_wire_response(&text),
                401 | 403 => return Err(GatewayError::AuthError { status }),
                429 => GatewayError::RateLimited { attempts },
                500..=599 => GatewayError::ServerError { status, attempts },
                _ => {
                    return Err(GatewayError::Rejected {
                        status,
                        detail: text.chars().take(200).collect(),
                    })
                }
            },
            TransportReply::TimedOut => GatewayError::Timeout { attempts },
            TransportReply::ConnError(detail) => GatewayError::Connection { attempts, detail },
        };
        if attempts > config.max_retries {
            return Err(transient);
        }
        let delay = backoff_delay(config, attempts - 1);
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
    }
}

/// Fallback behavior for mock requests with no scripted entry.
#[derive(Clone)]
pub enum DefaultRule {
    /// Respond with the content of the last user message.
    EchoLastUser,
    /// Respond with a fixed string.
    Fixed(String),
    /// Respond with an arbitrary deterministic function of the request.
    Custom(Arc<dyn Fn(&ChatRequest) -> String + Send + Sync>),
}

impl std::fmt::Debug for DefaultRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DefaultRule::EchoLastUser => write!(f, "EchoLastUser"),
            DefaultRule::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            DefaultRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Deterministic scripted responses keyed by request digest.
#[derive(Debug, Clone, Default)]
pub struct MockScript {
    entries: BTreeMap<String, String>,
    default: Option<DefaultRule>,
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Script a response for exactly this request.
    pub fn stub(mut self, request: &ChatRequest, content: impl Into<String>) -> Self {
        self.entries.insert(request_digest(request), content.into());
        self
    }

    pub fn stub_digest(mut self, digest: impl Into<String>, content: impl Into<String>) -> Self {
        self.entries.insert(digest.into(), content.into());
        self
    }

    pub fn with_default(mut self, rule: DefaultRule) -> Self {
        self.default = Some(rule);
        self
    }
}

fn synth_response(request: &ChatRequest, content: String) -> ChatResponse {
    // Token counts are synthesized deterministically from lengths.
    let prompt_chars: usize = request.messages.iter().map(|m| m.content.chars().count()).sum();
    ChatResponse {
        prompt_tokens: (prompt_chars / 4) as u32,
        completion_tokens: (content.chars().count() / 4) as u32,
        content,
        finish: Finish::Stop,
    }
}

/// Resolve a request against a script: exact digest match first, then the
/// default rule. Pure function of (script, request).
pub fn mock_complete(script: &MockScript, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
    validate_request(request)?;
    let digest = request_digest(request);
    if let Some(content) = script.entries.get(&digest) {
        return Ok(synth_response(request, content.clone()));
    }
    match &script.default {
        Some(DefaultRule::EchoLastUser) => {
            let last_user = request
                .messages
                .iter()
                .rev()
                .find(|m| m.role == Role::User)
                .map(|m| m.content.clone())
                .unwrap_or_default();
            Ok(synth_response(request, last_user))
        }
        Some(DefaultRule::Fixed(content)) => Ok(synth_response(request, content.clone())),
        Some(DefaultRule::Custom(f)) => Ok(synth_response(request, f(request))),
        None => Err(GatewayError::NoScriptEntry { digest }),
    }
}

/// One line of a transcript file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TranscriptRecord {
    digest: String,
    content: String,
    prompt_tokens: u32,
    completion_tokens: u32,
    finish: Finish,
}

fn load_transcript(path: &Path) -> Result<BTreeMap<String, ChatResponse>, GatewayError> {
    let file = File::open(path).map_err(|e| GatewayError::TranscriptFile {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let mut map = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GatewayError::TranscriptFile {
            path: path.to_path_buf(),
            detail: format!("line {}: {}", i + 1, e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptRecord =
            serde_json::from_str(&line).map_err(|e| GatewayError::TranscriptFile {
                path: path.to_path_buf(),
                detail: format!("line {}: {}", i + 1, e),
            })?;
        map.insert(
            record.digest,
            ChatResponse {
                content: record.content,
                prompt_tokens: record.prompt_tokens,
                completion_tokens: record.completion_tokens,
                finish: record.finish,
            },
        );
    }
    Ok(map)
}

/// Counting semaphore bounding concurrent in-flight requests.
struct Admission {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Admission {
    fn new(slots: usize) -> Self {
        Self {
            free: Mutex::new(slots.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> AdmissionGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        AdmissionGuard { admission: self }
    }
}

struct AdmissionGuard<'a> {
    admission: &'a Admission,
}

impl Drop for AdmissionGuard<'_> {
    fn drop(&mut self) {
        let mut free = self.admission.free.lock().unwrap();
        *free += 1;
        self.admission.cv.notify_one();
    }
}

enum Backend {
    Http(Box<dyn Transport>),
    Mock(MockScript),
    Replay(BTreeMap<String, ChatResponse>),
    Record {
        inner: Box<Backend>,
        sink: Mutex<File>,
        path: PathBuf,
    },
}

/// A configured completion service: one of live HTTP, scripted mock,
/// transcript replay, or a recording wrapper around any of those.
pub struct Gateway {
    config: GatewayConfig,
    backend: Backend,
    admission: Admission,
}

impl Gateway {
    pub fn http(config: GatewayConfig) -> Self {
        let transport = HttpTransport::new(config.timeout_secs);
        Self::with_transport(config, Box::new(transport))
    }

    /// Live-style gateway over an arbitrary transport (test seam).
    pub fn with_transport(config: GatewayConfig, transport: Box<dyn Transport>) -> Self {
        let admission = Admission::new(config.max_in_flight);
        Self {
            config,
            backend: Backend::Http(transport),
            admission,
        }
    }

    pub fn mock(config: GatewayConfig, script: MockScript) -> Self {
        let admission = Admission::new(config.max_in_flight);
        Self {
            config,
            backend: Backend::Mock(script),
            admission,
        }
    }

    /// Serve responses from a previously recorded transcript.
    pub fn replay(config: GatewayConfig, path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let map = load_transcript(path.as_ref())?;
        let admission = Admission::new(config.max_in_flight);
        Ok(Self {
            config,
            backend: Backend::Replay(map),
            admission,
        })
    }

    /// Wrap this gateway so every response is appended to `path` as a
    /// transcript line.
    pub fn record(self, path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| GatewayError::TranscriptFile {
                path: path.clone(),
                detail: e.to_string(),
            })?;
        Ok(Self {
            config: self.config,
            backend: Backend::Record {
                inner: Box::new(self.backend),
                sink: Mutex::new(file),
                path,
            },
            admission: self.admission,
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let _slot = self.admission.acquire();
        Self::dispatch(&self.config, &self.backend, request)
    }

    fn dispatch(
        config: &GatewayConfig,
        backend: &Backend,
        request: &ChatRequest,
    ) -> Result<ChatResponse, GatewayError> {
        match backend {
            Backend::Http(transport) => {
                let token = if config.auth_env.is_empty() {
                    String::new()
                } else {
                    std::env::var(&config.auth_env)
                        .map_err(|_| GatewayError::MissingAuthToken(config.auth_env.clone()))?
                };
                complete(config, transport.as_ref(), &token, request)
            }
            Backend::Mock(script) => mock_complete(script, request),
            Backend::Replay(map) => {
                validate_request(request)?;
                let digest = request_digest(request);
                map.get(&digest)
                    .cloned()
                    .ok_or(GatewayError::TranscriptMiss { digest })
            }
            Backend::Record { inner, sink, path } => {
                let response = Self::dispatch(config, inner, request)?;
                let record = TranscriptRecord {
                    digest: request_digest(request),
                    content: response.content.clone(),
                    prompt_tokens: response.prompt_tokens,
                    completion_tokens: response.completion_tokens,
                    finish: response.finish,
                };
                let line = serde_json::to_string(&record).expect("record serializes");
                let mut file = sink.lock().unwrap();
                writeln!(file, "{line}").map_err(|e| GatewayError::TranscriptFile {
                    path: path.clone(),
                    detail: e.to_string(),
                })?;
                Ok(response)
            }
        }
    }
}
