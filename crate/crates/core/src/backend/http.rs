//! Generic JSON-over-HTTP translation client.
//!
//! Request body, `POST`ed to the configured endpoint:
//!
//! ```json
//! {"texts": ["..."], "source": "en", "target": "fa"}
//! ```
//!
//! Expected response: `{"translations": ["..."]}`, one entry per input text
//! in the same order. When `TRANSPROJ_API_KEY` is set its value is sent as
//! `Authorization: Bearer <key>`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, TokenBucket};
use crate::error::BackendError;

pub const API_KEY_ENV: &str = "TRANSPROJ_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslateRequestBody {
    pub texts: Vec<String>,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslateResponseBody {
    pub translations: Vec<String>,
}

/// Exponential backoff with jitter for transport errors and 5xx responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (0-based), scaled by a jitter factor in `[1, 1.5)`.
    pub fn delay(&self, attempt: u32, jitter: f64) -> Duration {
        let nominal = self.base_delay.as_secs_f64() * self.factor.powi(attempt as i32);
        Duration::from_secs_f64(nominal * (1.0 + jitter.clamp(0.0, 0.5)))
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub max_texts_per_request: usize,
    pub max_in_flight: usize,
    /// Requests per second; `None` disables rate limiting.
    pub requests_per_second: Option<f64>,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            api_key: None,
            max_texts_per_request: 32,
            max_in_flight: 4,
            requests_per_second: Some(5.0),
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(30),
        }
    }

    /// Picks up the API key from `TRANSPROJ_API_KEY` when set.
    pub fn with_env_api_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }
}

type ChunkResult = Result<Vec<String>, BackendError>;

pub struct HttpBackend {
    id: String,
    config: HttpConfig,
    agent: ureq::Agent,
    limiter: Option<TokenBucket>,
    requests: AtomicUsize,
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let limiter = config.requests_per_second.map(TokenBucket::per_second);
        HttpBackend {
            id: format!("http:{}", config.endpoint),
            config,
            agent,
            limiter,
            requests: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    /// HTTP requests attempted so far, retries included.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn send_once(&self, body: &TranslateRequestBody) -> Result<Vec<String>, Attempt> {
        if let Some(limiter) = &self.limiter {
            limiter.acquire();
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let response = match request.send_json(body) {
            Ok(response) => response,
            Err(ureq::Error::Status(code, response)) if code >= 500 => {
                let text = response.into_string().unwrap_or_default();
                return Err(Attempt::Retry(format!("HTTP {code}: {text}")));
            }
            Err(ureq::Error::Status(code, response)) => {
                let text = response.into_string().unwrap_or_default();
                return Err(Attempt::Fatal(BackendError::Unavailable(format!(
                    "HTTP {code}: {text}"
                ))));
            }
            Err(ureq::Error::Transport(e)) => return Err(Attempt::Retry(e.to_string())),
        };
        let parsed: TranslateResponseBody = response
            .into_json()
            .map_err(|e| Attempt::Fatal(BackendError::Protocol(format!("unreadable response: {e}"))))?;
        if parsed.translations.len() != body.texts.len() {
            return Err(Attempt::Fatal(BackendError::Protocol(format!(
                "{} translations for {} texts",
                parsed.translations.len(),
                body.texts.len()
            ))));
        }
        Ok(parsed.translations)
    }

    fn send_with_retry(&self, body: &TranslateRequestBody) -> Result<Vec<String>, BackendError> {
        let retry = self.config.retry;
        let mut attempt = 0;
        loop {
            match self.send_once(body) {
                Ok(translations) => return Ok(translations),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) if attempt < retry.max_retries => {
                    let delay = retry.delay(attempt, rand::thread_rng().gen_range(0.0..0.5));
                    warn!("{}: {message}; retrying in {delay:?}", self.id);
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(Attempt::Retry(message)) => {
                    return Err(BackendError::Unavailable(format!(
                        "{message} (gave up after {} retries)",
                        retry.max_retries
                    )))
                }
            }
        }
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn translate(&self, texts: &[String], source: &str, target: &str) -> Result<Vec<String>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let bodies: Vec<TranslateRequestBody> = texts
            .chunks(self.config.max_texts_per_request.max(1))
            .map(|chunk| TranslateRequestBody {
                texts: chunk.to_vec(),
                source: source.to_string(),
                target: target.to_string(),
            })
            .collect();
        debug!("{}: {} texts in {} requests", self.id, texts.len(), bodies.len());

        let results: Mutex<Vec<Option<ChunkResult>>> = Mutex::new(vec![None; bodies.len()]);
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.max(1).min(bodies.len());
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(body) = bodies.get(i) else { break };
                    let result = self.send_with_retry(body);
                    let failed = result.is_err();
                    results.lock().expect("results poisoned")[i] = Some(result);
                    if failed {
                        // let the remaining chunks drain without sending
                        next.fetch_add(bodies.len(), Ordering::Relaxed);
                    }
                });
            }
        });

        let mut out = Vec::with_capacity(texts.len());
        for result in results.into_inner().expect("results poisoned") {
            match result {
                Some(Ok(chunk)) => out.extend(chunk),
                Some(Err(e)) => return Err(e),
                None => {
                    return Err(BackendError::Unavailable(
                        "request skipped after an earlier failure".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}
