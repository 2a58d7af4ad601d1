//! Generic HTTP pivot provider.
//!
//! Wire format (one POST per batch, JSON both ways):
//!
//! ```text
//! POST <endpoint>
//! Authorization: Bearer <key>          (only when a key is configured)
//! {"task": "transliterate" | "translate", "source": "<locale>", "target": "<pivot>",
//!  "words": ["w1", "w2", ...]}
//!
//! 200 OK
//! {"results": {"w1": "form", "w2": null, ...}}
//! ```
//!
//! Words missing from `results`, or mapped to `null`, are provider misses.
//! Any transport or decoding failure is retried; once retries are exhausted
//! the provider logs a warning, answers absent for that batch and stops
//! issuing further requests for the rest of the run.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{normalize_pivot, PivotProvider};

pub const ENDPOINT_ENV: &str = "WERNORM_PIVOT_ENDPOINT";
pub const KEY_ENV: &str = "WERNORM_PIVOT_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotTask {
    Transliterate,
    Translate,
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub key: Option<String>,
    pub source_locale: String,
    pub pivot_language: String,
    pub max_retries: u32,
    pub max_concurrent: usize,
    pub batch_size: usize,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            key: None,
            source_locale: String::new(),
            pivot_language: "en".into(),
            max_retries: 3,
            max_concurrent: 4,
            batch_size: 64,
            timeout: Duration::from_secs(30),
        }
    }

    /// Reads the endpoint and key from the environment. Returns `None` when
    /// no endpoint is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty())?;
        let mut cfg = Self::new(endpoint);
        cfg.key = std::env::var(KEY_ENV).ok().filter(|s| !s.is_empty());
        Some(cfg)
    }
}

#[derive(Debug, Serialize)]
struct BatchRequest<'a> {
    task: PivotTask,
    source: &'a str,
    target: &'a str,
    words: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
struct BatchResponse {
    results: BTreeMap<String, Option<String>>,
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.cap {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

pub struct RemotePivotProvider {
    task: PivotTask,
    config: RemoteConfig,
    agent: ureq::Agent,
    gate: Gate,
    degraded: AtomicBool,
}

impl RemotePivotProvider {
    pub fn new(task: PivotTask, config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        let cap = config.max_concurrent.max(1);
        Self {
            task,
            config,
            agent,
            gate: Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                cap,
            },
            degraded: AtomicBool::new(false),
        }
    }

    pub fn is_degraded(&self) -> bool {
        self.degraded.load(Ordering::Relaxed)
    }

    fn request(&self, words: &[&str]) -> Result<BatchResponse, String> {
        let body = BatchRequest {
            task: self.task,
            source: &self.config.source_locale,
            target: &self.config.pivot_language,
            words,
        };
        let _slot = self.gate.enter();
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| e.to_string())?;
        resp.body_mut()
            .read_json::<BatchResponse>()
            .map_err(|e| e.to_string())
    }

    fn fetch(&self, words: &[&str]) -> Option<BatchResponse> {
        if self.is_degraded() {
            return None;
        }
        let mut last_err = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.request(words) {
                Ok(resp) => return Some(resp),
                Err(e) => {
                    log::debug!(
                        "{:?} request attempt {} failed: {e}",
                        self.task,
                        attempt + 1
                    );
                    last_err = e;
                }
            }
        }
        log::warn!(
            "{:?} provider at {} unavailable after {} attempts ({last_err}); continuing without it",
            self.task,
            self.config.endpoint,
            self.config.max_retries + 1
        );
        self.degraded.store(true, Ordering::Relaxed);
        None
    }
}

impl PivotProvider for RemotePivotProvider {
    fn lookup(&self, word: &str) -> Option<String> {
        self.lookup_batch(&[word]).pop().flatten()
    }

    fn lookup_batch(&self, words: &[&str]) -> Vec<Option<String>> {
        let mut out = Vec::with_capacity(words.len());
        for chunk in words.chunks(self.config.batch_size.max(1)) {
            match self.fetch(chunk) {
                Some(resp) => out.extend(chunk.iter().map(|w| {
                    resp.results
                        .get(*w)
                        .cloned()
                        .flatten()
                        .map(|f| normalize_pivot(&f))
                        .filter(|f| !f.is_empty())
                })),
                None => out.extend(chunk.iter().map(|_| None)),
            }
        }
        out
    }
}
