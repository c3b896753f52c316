use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cache::{CacheEntry, DiskCache};
use crate::transport::{RawResponse, Transport, TransportError};
use crate::{CompletionRequest, EndpointProfile, LlmError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay_ms: 1000,
            max_delay_ms: 60_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base * 2^(attempt-1),
    /// capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub from_cache: bool,
    pub usage: Option<serde_json::Value>,
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

pub struct LlmClient {
    profile: EndpointProfile,
    transport: Box<dyn Transport>,
    cache: Option<DiskCache>,
    retry: RetryPolicy,
    limiter: Semaphore,
    memo: Mutex<HashMap<String, Completion>>,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    network_calls: AtomicUsize,
}

const CONTEXT_MARKERS: &[&str] = &[
    "context length",
    "context_length",
    "context window",
    "maximum context",
    "too many tokens",
    "input is too long",
    "prompt is too long",
    "exceeds the maximum number of tokens",
];

fn is_context_error(resp: &RawResponse) -> bool {
    let body = resp.body.to_lowercase();
    matches!(resp.status, 400 | 413 | 422) && CONTEXT_MARKERS.iter().any(|m| body.contains(m))
}

fn parse_body(body: &str) -> Result<(String, Option<serde_json::Value>), LlmError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    let text = match content {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<String>(),
        _ => return Err(LlmError::MalformedResponse("no choices[0].message.content".into())),
    };
    let usage = v.get("usage").filter(|u| !u.is_null()).cloned();
    Ok((text, usage))
}

impl LlmClient {
    pub fn new(profile: EndpointProfile, transport: Box<dyn Transport>) -> Self {
        LlmClient {
            profile,
            transport,
            cache: None,
            retry: RetryPolicy::default(),
            limiter: Semaphore::new(4),
            memo: Mutex::new(HashMap::new()),
            key_locks: Mutex::new(HashMap::new()),
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.limiter = Semaphore::new(n);
        self
    }

    pub fn profile(&self) -> &EndpointProfile {
        &self.profile
    }

    /// Number of requests that reached the transport.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn lookup(&self, key: &str) -> Option<Completion> {
        if let Some(c) = self.memo.lock().unwrap().get(key) {
            return Some(c.clone());
        }
        let entry = self.cache.as_ref()?.get(key)?;
        Some(Completion {
            text: entry.text,
            from_cache: true,
            usage: entry.usage,
        })
    }

    /// Cache first; on a miss, one network exchange (with retries) whose
    /// result is cached. Concurrent misses for the same request share one
    /// call.
    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        request.validate()?;
        let key = request.cache_key();
        if let Some(hit) = self.lookup(&key) {
            return Ok(Completion { from_cache: true, ..hit });
        }
        let lock = self
            .key_locks
            .lock()
            .unwrap()
            .entry(key.clone())
            .or_default()
            .clone();
        let _guard = lock.lock().unwrap();
        if let Some(hit) = self.lookup(&key) {
            return Ok(Completion { from_cache: true, ..hit });
        }
        let result = self.fetch(request, &key);
        self.key_locks.lock().unwrap().remove(&key);
        result
    }

    fn fetch(&self, request: &CompletionRequest, key: &str) -> Result<Completion, LlmError> {
        if let Some(limit) = self.profile.context_limit {
            let estimate = self.profile.estimate_tokens(&request.prompt) + request.max_output_tokens as usize;
            if estimate > limit {
                return Err(LlmError::ContextLength {
                    limit: Some(limit),
                    detail: format!("estimated {estimate} tokens"),
                });
            }
        }
        let api_key = self.profile.api_key()?;
        let body = request.wire_body();
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                let wait = self.retry.delay(attempt - 1);
                log::info!("retry {attempt}/{} in {wait:?}: {last}", self.retry.max_attempts);
                std::thread::sleep(wait);
            }
            let outcome = {
                let _permit = self.limiter.acquire();
                self.network_calls.fetch_add(1, Ordering::SeqCst);
                self.transport.post(&self.profile, api_key.as_deref(), &body)
            };
            match outcome {
                Err(e) if e.is_transient() => last = e.to_string(),
                Err(TransportError::Other(e)) => return Err(LlmError::Transport(e)),
                Err(e) => return Err(LlmError::Transport(e.to_string())),
                Ok(resp) if resp.status == 200 => {
                    let (text, usage) = parse_body(&resp.body)?;
                    let completion = Completion {
                        text,
                        from_cache: false,
                        usage,
                    };
                    self.store(key, request, &completion)?;
                    return Ok(completion);
                }
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last = format!("HTTP {}: {}", resp.status, snippet(&resp.body));
                }
                Ok(resp) if resp.status == 401 || resp.status == 403 => {
                    return Err(LlmError::Auth(snippet(&resp.body)));
                }
                Ok(resp) if is_context_error(&resp) => {
                    return Err(LlmError::ContextLength {
                        limit: self.profile.context_limit,
                        detail: snippet(&resp.body),
                    });
                }
                Ok(resp) => {
                    return Err(LlmError::Http {
                        status: resp.status,
                        body: snippet(&resp.body),
                    })
                }
            }
        }
        Err(LlmError::ExhaustedRetries {
            attempts: self.retry.max_attempts,
            last,
        })
    }

    fn store(&self, key: &str, request: &CompletionRequest, c: &Completion) -> Result<(), LlmError> {
        if let Some(cache) = &self.cache {
            let timestamp = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            cache.put(&CacheEntry {
                key: key.to_string(),
                model: request.model.clone(),
                text: c.text.clone(),
                timestamp,
                usage: c.usage.clone(),
            })?;
        }
        self.memo.lock().unwrap().insert(key.to_string(), c.clone());
        Ok(())
    }
}

fn snippet(body: &str) -> String {
    const MAX: usize = 300;
    match body.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &body[..i]),
        None => body.to_string(),
    }
}
