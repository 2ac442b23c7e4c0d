// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use fm2_core::corpus::{Corpus, Passage};
use fm2_core::eventlog::MemorySink;
use fm2_core::game::{GameConfig, GameEngine};
use fm2_core::retrieval::SparseIndex;
use fm2_server::auth::TOKEN_HEADER;
use fm2_server::{router, AppState, ManualClock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

pub fn passages(pages: usize, per_page: usize, seed: u64) -> Vec<Passage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for p in 0..pages {
        for j in 0..per_page {
            let len = rng.random_range(20..=40);
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.random_range(0..500))).collect();
            out.push(Passage {
                id: format!("pg{p:03}_{j}"),
                page_title: format!("Page {p}"),
                text: words.join(" "),
                category: Some(["history", "science", "sport"][p % 3].to_string()),
            });
        }
    }
    out
}

pub fn fixture() -> (Arc<Corpus>, Arc<SparseIndex>) {
    let corpus = Corpus::from_passages(passages(24, 3, 9)).unwrap();
    let index = SparseIndex::build(&corpus).unwrap();
    (Arc::new(corpus), Arc::new(index))
}

pub struct TestApp {
    pub app: Router,
    pub state: AppState,
    pub clock: Arc<ManualClock>,
    pub sink: MemorySink,
}

pub fn test_app(config: GameConfig) -> TestApp {
    let (corpus, index) = fixture();
    let sink = MemorySink::default();
    let engine = GameEngine::new(corpus, index, config).with_sink(Box::new(sink.clone()));
    let clock = Arc::new(ManualClock::new(1_000_000));
    let state = AppState::new(engine, clock.clone(), 365 * 24 * 3600);
    TestApp {
        app: router(state.clone()),
        state,
        clock,
        sink,
    }
}

pub async fn call(app: &Router, method: &str, path: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(path);
    if let Some(t) = token {
        req = req.header(TOKEN_HEADER, t);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

/// First six words of the first passage shown to the author.
pub fn first_span(start: &Value) -> String {
    let text = start["passages"][0]["text"].as_str().unwrap();
    text.split(' ').take(6).collect::<Vec<_>>().join(" ")
}
