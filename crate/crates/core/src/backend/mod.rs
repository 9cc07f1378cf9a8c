//! Translation backends.
//!
//! Every backend maps a batch of texts to the same number of translated
//! texts, in order. The offline backends (identity, dictionary, scrambler)
//! are deterministic stand-ins for a real MT service; [`HttpBackend`] talks
//! to a JSON endpoint and is normally wrapped in a [`CachedBackend`].

mod cache;
mod cached;
mod http;
mod offline;
mod rate_limit;

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

pub use cache::{CacheKey, CacheRecord, TranslationCache};
pub use cached::CachedBackend;
pub use http::{HttpBackend, HttpConfig, RetryPolicy, TranslateRequestBody, TranslateResponseBody, API_KEY_ENV};
pub use offline::{DictionaryBackend, IdentityBackend, ScrambleMode, ScramblerBackend};
pub use rate_limit::TokenBucket;

use crate::error::BackendError;

/// Anything that can translate a batch of texts.
pub trait Backend: Send + Sync {
    /// Stable identifier, used as part of the cache key.
    fn id(&self) -> &str;

    /// Translates `texts` from `source` to `target`, preserving order and count.
    fn translate(&self, texts: &[String], source: &str, target: &str) -> Result<Vec<String>, BackendError>;

    /// Call and cache counters, for backends that keep them.
    fn counters(&self) -> BackendCounters {
        BackendCounters::default()
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn translate(&self, texts: &[String], source: &str, target: &str) -> Result<Vec<String>, BackendError> {
        (**self).translate(texts, source, target)
    }

    fn counters(&self) -> BackendCounters {
        (**self).counters()
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn translate(&self, texts: &[String], source: &str, target: &str) -> Result<Vec<String>, BackendError> {
        (**self).translate(texts, source, target)
    }

    fn counters(&self) -> BackendCounters {
        (**self).counters()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BackendCounters {
    /// Calls that reached the underlying translator.
    pub backend_calls: usize,
    /// Texts sent to the underlying translator.
    pub texts_translated: usize,
    /// Texts answered from the cache.
    pub cache_hits: usize,
}

impl BackendCounters {
    pub fn since(self, earlier: BackendCounters) -> BackendCounters {
        BackendCounters {
            backend_calls: self.backend_calls - earlier.backend_calls,
            texts_translated: self.texts_translated - earlier.texts_translated,
            cache_hits: self.cache_hits - earlier.cache_hits,
        }
    }
}

#[derive(Debug, Default)]
pub(crate) struct AtomicCounters {
    backend_calls: AtomicUsize,
    texts_translated: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl AtomicCounters {
    pub(crate) fn record_call(&self, texts: usize) {
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        self.texts_translated.fetch_add(texts, Ordering::Relaxed);
    }

    pub(crate) fn record_hits(&self, hits: usize) {
        self.cache_hits.fetch_add(hits, Ordering::Relaxed);
    }

    pub(crate) fn snapshot(&self) -> BackendCounters {
        BackendCounters {
            backend_calls: self.backend_calls.load(Ordering::Relaxed),
            texts_translated: self.texts_translated.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
        }
    }
}

/// A validated batch: at least one text, none of them empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRequest {
    texts: Vec<String>,
    source_lang: String,
    target_lang: String,
}

impl TranslationRequest {
    pub fn new(
        texts: Vec<String>,
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
    ) -> Result<Self, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::InvalidRequest("no texts".into()));
        }
        if let Some(i) = texts.iter().position(|t| t.is_empty()) {
            return Err(BackendError::InvalidRequest(format!("text {i} is empty")));
        }
        let source_lang = source_lang.into();
        let target_lang = target_lang.into();
        if source_lang.is_empty() || target_lang.is_empty() {
            return Err(BackendError::InvalidRequest("empty language code".into()));
        }
        Ok(TranslationRequest {
            texts,
            source_lang,
            target_lang,
        })
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn source_lang(&self) -> &str {
        &self.source_lang
    }

    pub fn target_lang(&self) -> &str {
        &self.target_lang
    }
}

/// Runs `request` through `backend` and checks that the answer has one text per input.
pub fn translate_batch(request: &TranslationRequest, backend: &dyn Backend) -> Result<Vec<String>, BackendError> {
    let out = backend.translate(&request.texts, &request.source_lang, &request.target_lang)?;
    if out.len() != request.texts.len() {
        return Err(BackendError::Protocol(format!(
            "{} returned {} translations for {} texts",
            backend.id(),
            out.len(),
            request.texts.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Truncating;

    impl Backend for Truncating {
        fn id(&self) -> &str {
            "truncating"
        }

        fn translate(&self, texts: &[String], _: &str, _: &str) -> Result<Vec<String>, BackendError> {
            Ok(texts.iter().skip(1).cloned().collect())
        }
    }

    fn request(texts: &[&str]) -> TranslationRequest {
        TranslationRequest::new(texts.iter().map(|t| t.to_string()).collect(), "en", "fa").unwrap()
    }

    #[test]
    fn identity_batch() {
        let out = translate_batch(&request(&["a b", "[*0*]"]), &IdentityBackend).unwrap();
        assert_eq!(out, ["a b", "[*0*]"]);
    }

    #[test]
    fn dictionary_batch() {
        let dict = DictionaryBackend::from_entries([("lives", "zendegi")]);
        let out = translate_batch(&request(&["John lives"]), &dict).unwrap();
        assert_eq!(out, ["John zendegi"]);
    }

    #[test]
    fn reversing_scrambler_batch() {
        let scrambler = ScramblerBackend::new(ScrambleMode::Reverse);
        let out = translate_batch(&request(&["[*0*] x [*1*]"]), &scrambler).unwrap();
        assert_eq!(out, ["[*1*] x [*0*]"]);
    }

    #[test]
    fn wrong_cardinality_is_a_protocol_error() {
        let err = translate_batch(&request(&["a", "b"]), &Truncating).unwrap_err();
        assert!(matches!(err, BackendError::Protocol(_)));
    }

    #[test]
    fn request_invariants() {
        assert!(TranslationRequest::new(vec![], "en", "fa").is_err());
        assert!(TranslationRequest::new(vec!["".into()], "en", "fa").is_err());
        assert!(TranslationRequest::new(vec!["a".into()], "", "fa").is_err());
    }
}
