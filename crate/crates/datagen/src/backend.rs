//! Chat-completion backends: an OpenAI-compatible HTTP client, a table-driven
//! mock, and the retry and response-cache layers stacked on top of either.

use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// One chat-completion request. Field order is part of the cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    /// SHA-256 over the canonical JSON of (model, system, prompt, params).
    pub fn cache_key(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Timeout(_) | BackendError::Transient(_))
    }
}

pub trait LmBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

impl<B: LmBackend + ?Sized> LmBackend for Arc<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        (**self).complete(request)
    }
}

/// Decoding parameters and model name for requests built by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ModelParams {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            temperature: 0.0,
            max_tokens: 2048,
        }
    }

    pub fn request(&self, system: &str, user: String) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            system: system.to_string(),
            user,
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Reads the bearer token from `api_key_env` if that variable is set.
    pub fn new(base_url: &str, api_key_env: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key: std::env::var(api_key_env).ok().filter(|k| !k.is_empty()),
        }
    }

    fn body(request: &ChatRequest) -> serde_json::Value {
        serde_json::json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }
}

fn map_ureq_error(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Timeout(t) => BackendError::Timeout(t.to_string()),
        ureq::Error::Io(e) => BackendError::Transient(e.to_string()),
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound | ureq::Error::BodyStalled => {
            BackendError::Transient(err.to_string())
        }
        other => BackendError::Fatal(other.to_string()),
    }
}

/// Pulls `choices[0].message.content` out of a chat-completions response.
pub fn parse_chat_response(body: &str) -> Result<String, BackendError> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| BackendError::Fatal(format!("response is not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Fatal("response lacks choices[0].message.content".into()))
}

impl LmBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let payload = serde_json::to_vec(&Self::body(request)).expect("body serializes");
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = req.send(&payload[..]).map_err(map_ureq_error)?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(map_ureq_error)?;
        match status {
            200..=299 => parse_chat_response(&text),
            408 | 429 | 500..=599 => Err(BackendError::Transient(format!("HTTP {status}: {text}"))),
            _ => Err(BackendError::Fatal(format!("HTTP {status}: {text}"))),
        }
    }
}

/// One row of a mock response table.
///
/// `match` lists substrings that must all occur in the user prompt; an
/// empty list matches everything. The first matching row wins. A row with
/// `error` fails instead of answering (`timeout`, `transient` or `fatal`);
/// with `fail_times` it fails that many times and then answers.
#[derive(Debug, Clone, Deserialize)]
pub struct MockEntry {
    #[serde(rename = "match", default)]
    pub patterns: Vec<String>,
    #[serde(default)]
    pub response: String,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub fail_times: Option<usize>,
}

/// Answers from a fixed table and never touches the network.
pub struct MockBackend {
    entries: Vec<MockEntry>,
    failures: Vec<AtomicUsize>,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(entries: Vec<MockEntry>) -> Self {
        let failures = entries.iter().map(|_| AtomicUsize::new(0)).collect();
        Self {
            entries,
            failures,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, instrir_core::Error> {
        let entries = instrir_core::jsonl::read_jsonl(reader)?;
        Ok(Self::new(entries))
    }

    pub fn from_path(path: &Path) -> Result<Self, instrir_core::Error> {
        let file = fs::File::open(path)?;
        Self::from_jsonl(std::io::BufReader::new(file))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LmBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let idx = self
            .entries
            .iter()
            .position(|e| e.patterns.iter().all(|p| request.user.contains(p.as_str())))
            .ok_or_else(|| BackendError::Fatal("no mock table entry matches the prompt".into()))?;
        let entry = &self.entries[idx];
        if let Some(kind) = &entry.error {
            let failed = self.failures[idx].fetch_add(1, Ordering::SeqCst);
            if entry.fail_times.is_none_or(|n| failed < n) {
                let msg = format!("mock {kind}");
                return Err(match kind.as_str() {
                    "timeout" => BackendError::Timeout(msg),
                    "transient" => BackendError::Transient(msg),
                    _ => BackendError::Fatal(msg),
                });
            }
        }
        Ok(entry.response.clone())
    }
}

/// Adapts a closure into a backend; handy for programmatic mocks.
pub struct FnBackend<F> {
    f: F,
    calls: AtomicUsize,
}

impl<F> FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<F> LmBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (0-based): base * 2^attempt, capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Retries retryable failures with exponential backoff.
pub struct RetryingBackend<B> {
    inner: B,
    policy: RetryPolicy,
}

impl<B: LmBackend> RetryingBackend<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        Self { inner, policy }
    }
}

impl<B: LmBackend> LmBackend for RetryingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut attempt = 0;
        loop {
            match self.inner.complete(request) {
                Err(e) if e.is_retryable() && attempt < self.policy.max_retries => {
                    log::warn!("retrying after {e} (attempt {})", attempt + 1);
                    std::thread::sleep(self.policy.delay(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    request: ChatRequest,
    response: String,
}

const LOCK_STRIPES: usize = 64;

/// On-disk response cache keyed by [`ChatRequest::cache_key`]. Only
/// successful responses are stored. Lookups for the same key are serialized
/// so a key is fetched and written at most once.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
    locks: Vec<Mutex<()>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<B: LmBackend> CachedBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            inner,
            dir,
            locks: (0..LOCK_STRIPES).map(|_| Mutex::new(())).collect(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    fn read(&self, path: &Path, request: &ChatRequest) -> Option<String> {
        let bytes = fs::read(path).ok()?;
        let record: CacheRecord = serde_json::from_slice(&bytes).ok()?;
        (record.request == *request).then_some(record.response)
    }

    fn write(&self, path: &Path, request: &ChatRequest, response: &str) -> std::io::Result<()> {
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent)?;
        let record = CacheRecord {
            request: request.clone(),
            response: response.to_string(),
        };
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&record).expect("record serializes"))?;
        fs::rename(&tmp, path)
    }
}

impl<B: LmBackend> LmBackend for CachedBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let key = request.cache_key();
        let path = self.path_for(&key);
        let stripe = usize::from_str_radix(&key[..4], 16).expect("hex key") % LOCK_STRIPES;
        let _guard = self.locks[stripe].lock().unwrap_or_else(|p| p.into_inner());
        if let Some(hit) = self.read(&path, request) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let response = self.inner.complete(request)?;
        if let Err(e) = self.write(&path, request, &response) {
            log::warn!("could not write cache entry {}: {e}", path.display());
        }
        Ok(response)
    }
}
