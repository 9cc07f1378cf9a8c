use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use log::warn;

use super::{AtomicCounters, Backend, BackendCounters, CacheKey, CacheRecord, TranslationCache};
use crate::error::BackendError;

/// Consults a [`TranslationCache`] before the wrapped backend and records
/// every fresh translation in it.
///
/// Within one call every distinct text is sent at most once.
pub struct CachedBackend<B> {
    inner: B,
    cache: Arc<TranslationCache>,
    counters: AtomicCounters,
}

impl<B: Backend> CachedBackend<B> {
    pub fn new(inner: B, cache: Arc<TranslationCache>) -> Self {
        CachedBackend {
            inner,
            cache,
            counters: AtomicCounters::default(),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn cache(&self) -> &TranslationCache {
        &self.cache
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn translate(&self, texts: &[String], source: &str, target: &str) -> Result<Vec<String>, BackendError> {
        let id = self.inner.id();
        let mut resolved: HashMap<&str, String> = HashMap::new();
        let mut pending: HashSet<&str> = HashSet::new();
        let mut misses: Vec<&str> = Vec::new();
        let mut hits = 0;
        for text in texts {
            if resolved.contains_key(text.as_str()) || pending.contains(text.as_str()) {
                continue;
            }
            match self.cache.lookup(&CacheKey::new(id, source, target, text)) {
                Some(hit) => {
                    hits += 1;
                    resolved.insert(text, hit);
                }
                None => {
                    pending.insert(text);
                    misses.push(text);
                }
            }
        }
        self.counters.record_hits(hits);

        if !misses.is_empty() {
            let request: Vec<String> = misses.iter().map(|s| s.to_string()).collect();
            self.counters.record_call(request.len());
            let fresh = self.inner.translate(&request, source, target)?;
            if fresh.len() != request.len() {
                return Err(BackendError::Protocol(format!(
                    "{id} returned {} translations for {} texts",
                    fresh.len(),
                    request.len()
                )));
            }
            let records = request.iter().zip(&fresh).map(|(s, t)| CacheRecord {
                backend_id: id.to_string(),
                source_lang: source.to_string(),
                target_lang: target.to_string(),
                source_text: s.clone(),
                target_text: t.clone(),
            });
            if let Err(e) = self.cache.store_all(records) {
                // the translations are still good for this run
                warn!("failed to append to translation cache: {e}");
            }
            resolved.extend(misses.into_iter().zip(fresh));
        }

        Ok(texts.iter().map(|t| resolved[t.as_str()].clone()).collect())
    }

    fn counters(&self) -> BackendCounters {
        self.counters.snapshot()
    }
}
