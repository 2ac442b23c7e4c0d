// SPDX-License-Identifier: Apache-2.0

//! Client for an external entailment model served over HTTP.
//!
//! `POST {endpoint}/predict` with `{"claim": str, "evidence": [str]}`,
//! answered by `{"logits": [entail, refute]}`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::Verifier;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdapterConfig {
    /// Base URL, e.g. `http://127.0.0.1:8501`.
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    pub max_in_flight: usize,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            endpoint: "http://127.0.0.1:8501".into(),
            timeout_ms: 10_000,
            retries: 2,
            max_in_flight: 8,
        }
    }
}

#[derive(Serialize)]
struct PredictRequest<'a> {
    claim: &'a str,
    evidence: &'a [&'a str],
}

#[derive(Deserialize)]
struct PredictResponse {
    logits: Vec<f64>,
}

pub struct HttpAdapter {
    config: AdapterConfig,
    url: String,
    agent: ureq::Agent,
}

impl HttpAdapter {
    pub fn new(config: AdapterConfig) -> HttpAdapter {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        let url = format!("{}/predict", config.endpoint.trim_end_matches('/'));
        HttpAdapter { config, url, agent }
    }

    pub fn config(&self) -> &AdapterConfig {
        &self.config
    }

    fn call_once(&self, claim: &str, evidence: &[&str]) -> std::result::Result<[f64; 2], String> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(PredictRequest { claim, evidence })
            .map_err(|e| e.to_string())?;
        let body: PredictResponse = resp.body_mut().read_json().map_err(|e| format!("bad response body: {e}"))?;
        match body.logits.as_slice() {
            [e, r] => Ok([*e, *r]),
            other => Err(format!("expected 2 logits, got {}", other.len())),
        }
    }

    /// Scores many inputs with at most `max_in_flight` concurrent requests.
    /// Results keep input order.
    pub fn logits_many(&self, inputs: &[(String, Vec<String>)]) -> Vec<Result<[f64; 2]>> {
        let slots: Vec<Mutex<Option<Result<[f64; 2]>>>> = inputs.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.max(1).min(inputs.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some((claim, evidence)) = inputs.get(i) else { break };
                    let ev: Vec<&str> = evidence.iter().map(String::as_str).collect();
                    *slots[i].lock().unwrap() = Some(self.logits(claim, &ev));
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every slot filled"))
            .collect()
    }
}

impl Verifier for HttpAdapter {
    fn logits(&self, claim: &str, evidence: &[&str]) -> Result<[f64; 2]> {
        let start = Instant::now();
        let mut last = String::new();
        let attempts = self.config.retries + 1;
        for attempt in 1..=attempts {
            match self.call_once(claim, evidence) {
                Ok(z) => return Ok(z),
                Err(e) => {
                    log::debug!("adapter attempt {attempt}/{attempts} failed: {e}");
                    last = e;
                }
            }
        }
        Err(Error::Adapter {
            endpoint: self.url.clone(),
            attempts,
            elapsed_ms: start.elapsed().as_millis(),
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Minimal one-shot HTTP server returning `body` to each request.
    fn serve(body: &'static str, requests: usize) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for _ in 0..requests {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut payload = vec![0; len];
                reader.read_exact(&mut payload).unwrap();
                seen.push(String::from_utf8(payload).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            seen
        });
        (addr, handle)
    }

    #[test]
    fn posts_claim_and_evidence() {
        let (addr, handle) = serve(r#"{"logits":[0.25,-1.5]}"#, 1);
        let adapter = HttpAdapter::new(AdapterConfig {
            endpoint: addr,
            retries: 0,
            ..Default::default()
        });
        assert_eq!(adapter.logits("c", &["e1", "e2"]).unwrap(), [0.25, -1.5]);
        let seen = handle.join().unwrap();
        let v: serde_json::Value = serde_json::from_str(&seen[0]).unwrap();
        assert_eq!(v, serde_json::json!({"claim": "c", "evidence": ["e1", "e2"]}));
    }

    #[test]
    fn protocol_error_reports_endpoint_and_attempts() {
        let (addr, handle) = serve(r#"{"logits":[1.0]}"#, 2);
        let adapter = HttpAdapter::new(AdapterConfig {
            endpoint: addr.clone(),
            retries: 1,
            ..Default::default()
        });
        match adapter.logits("c", &[]) {
            Err(Error::Adapter { endpoint, attempts, .. }) => {
                assert_eq!(endpoint, format!("{addr}/predict"));
                assert_eq!(attempts, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        handle.join().unwrap();
    }

    #[test]
    fn unreachable_endpoint_is_an_error() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let adapter = HttpAdapter::new(AdapterConfig {
            endpoint: format!("http://127.0.0.1:{port}"),
            timeout_ms: 500,
            retries: 0,
            max_in_flight: 1,
        });
        assert!(matches!(adapter.logits("c", &[]), Err(Error::Adapter { .. })));
    }
}
