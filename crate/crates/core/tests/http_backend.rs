mod common;

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use common::stub_server::{translations, StubServer};
use transproj_core::backend::{Backend, CachedBackend, HttpBackend, HttpConfig, RetryPolicy, TranslationCache};
use transproj_core::BackendError;

fn fast_config(url: &str) -> HttpConfig {
    let mut config = HttpConfig::new(url);
    config.requests_per_second = None;
    config.retry = RetryPolicy {
        max_retries: 3,
        base_delay: Duration::from_millis(5),
        factor: 2.0,
    };
    config
}

fn strings(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("text {i}")).collect()
}

#[test]
fn batches_and_preserves_order() {
    let server = StubServer::start(|req, _| (200, translations(&req.texts(), |t| t.to_uppercase())));
    let mut config = fast_config(&server.url);
    config.max_texts_per_request = 3;
    let backend = HttpBackend::new(config);

    let texts = strings(10);
    let out = backend.translate(&texts, "en", "fa").unwrap();
    assert_eq!(out, texts.iter().map(|t| t.to_uppercase()).collect::<Vec<_>>());
    assert_eq!(server.requests(), 4);

    let seen = server.seen.lock().unwrap();
    assert!(seen
        .iter()
        .all(|r| r.body["source"] == "en" && r.body["target"] == "fa"));
    assert!(seen.iter().all(|r| r.texts().len() <= 3));
}

#[test]
fn retries_server_errors_then_succeeds() {
    let server = StubServer::start(|req, n| {
        if n < 2 {
            (503, "{}".into())
        } else {
            (200, translations(&req.texts(), str::to_string))
        }
    });
    let backend = HttpBackend::new(fast_config(&server.url));
    let out = backend.translate(&strings(2), "en", "fa").unwrap();
    assert_eq!(out, strings(2));
    assert_eq!(server.requests(), 3);
}

#[test]
fn gives_up_after_three_retries() {
    let server = StubServer::start(|_, _| (500, "{}".into()));
    let backend = HttpBackend::new(fast_config(&server.url));
    let err = backend.translate(&strings(1), "en", "fa").unwrap_err();
    assert!(matches!(err, BackendError::Unavailable(_)), "{err:?}");
    assert_eq!(server.requests(), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let server = StubServer::start(|_, _| (401, r#"{"error":"bad key"}"#.into()));
    let backend = HttpBackend::new(fast_config(&server.url));
    let err = backend.translate(&strings(1), "en", "fa").unwrap_err();
    assert!(
        matches!(err, BackendError::Unavailable(ref m) if m.contains("401")),
        "{err:?}"
    );
    assert_eq!(server.requests(), 1);
}

#[test]
fn wrong_cardinality_is_a_protocol_error() {
    let server = StubServer::start(|_, _| (200, r#"{"translations":["only one"]}"#.into()));
    let backend = HttpBackend::new(fast_config(&server.url));
    let err = backend.translate(&strings(2), "en", "fa").unwrap_err();
    assert!(matches!(err, BackendError::Protocol(_)), "{err:?}");
}

#[test]
fn malformed_body_is_a_protocol_error() {
    let server = StubServer::start(|_, _| (200, "not json".into()));
    let backend = HttpBackend::new(fast_config(&server.url));
    let err = backend.translate(&strings(1), "en", "fa").unwrap_err();
    assert!(matches!(err, BackendError::Protocol(_)), "{err:?}");
}

#[test]
fn sends_bearer_key() {
    let server = StubServer::start(|req, _| (200, translations(&req.texts(), str::to_string)));
    let mut config = fast_config(&server.url);
    config.api_key = Some("sekret".into());
    HttpBackend::new(config).translate(&strings(1), "en", "fa").unwrap();
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen[0].header("authorization"), Some("Bearer sekret"));
}

#[test]
fn in_flight_requests_are_bounded() {
    let server = StubServer::start(|req, _| {
        thread::sleep(Duration::from_millis(40));
        (200, translations(&req.texts(), str::to_string))
    });
    let mut config = fast_config(&server.url);
    config.max_texts_per_request = 1;
    config.max_in_flight = 2;
    let backend = HttpBackend::new(config);
    backend.translate(&strings(8), "en", "fa").unwrap();
    assert_eq!(server.requests(), 8);
    let peak = server.max_in_flight.load(std::sync::atomic::Ordering::SeqCst);
    assert!((1..=2).contains(&peak), "peak {peak}");
}

#[test]
fn rate_limit_spaces_requests() {
    let server = StubServer::start(|req, _| (200, translations(&req.texts(), str::to_string)));
    let mut config = fast_config(&server.url);
    config.max_texts_per_request = 1;
    config.max_in_flight = 4;
    config.requests_per_second = Some(20.0);
    let backend = HttpBackend::new(config);
    let started = std::time::Instant::now();
    // 20 free from the initial burst, 5 more at 50 ms each
    backend.translate(&strings(25), "en", "fa").unwrap();
    assert!(
        started.elapsed() >= Duration::from_millis(200),
        "{:?}",
        started.elapsed()
    );
}

#[test]
fn warm_cache_makes_no_requests() {
    let server = StubServer::start(|req, _| (200, translations(&req.texts(), |t| format!("<{t}>"))));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let texts = strings(5);

    let first = {
        let (cache, _) = TranslationCache::open(&path).unwrap();
        let backend = CachedBackend::new(HttpBackend::new(fast_config(&server.url)), Arc::new(cache));
        backend.translate(&texts, "en", "fa").unwrap()
    };
    assert_eq!(server.requests(), 1);

    let (cache, problems) = TranslationCache::open(&path).unwrap();
    assert!(problems.is_empty());
    let backend = CachedBackend::new(HttpBackend::new(fast_config(&server.url)), Arc::new(cache));
    let second = backend.translate(&texts, "en", "fa").unwrap();
    assert_eq!(first, second);
    assert_eq!(server.requests(), 1);
    assert_eq!(backend.inner().requests_sent(), 0);
    assert_eq!(backend.counters().cache_hits, 5);
}
