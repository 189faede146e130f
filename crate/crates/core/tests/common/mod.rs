#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of Pearson's chi-square test against equal expected counts.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// A request as seen by the stub server.
#[derive(Debug, Clone)]
pub struct SeenRequest {
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub raw_body: Vec<u8>,
    pub body: Value,
}

type Responder = dyn Fn(usize, &SeenRequest) -> (u16, String) + Send + Sync;

/// Minimal HTTP/1.1 chat-completions stand-in running on a background thread.
pub struct StubServer {
    pub base_url: String,
    pub requests: Arc<Mutex<Vec<SeenRequest>>>,
    hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn spawn(
        responder: impl Fn(usize, &SeenRequest) -> (u16, String) + Send + Sync + 'static,
    ) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let hits = Arc::new(AtomicUsize::new(0));
        let responder: Arc<Responder> = Arc::new(responder);
        {
            let requests = requests.clone();
            let hits = hits.clone();
            thread::spawn(move || {
                for stream in listener.incoming() {
                    let Ok(stream) = stream else { continue };
                    let n = hits.fetch_add(1, Ordering::SeqCst);
                    if let Some(req) = read_request(&stream) {
                        let (status, body) = responder(n, &req);
                        requests.lock().unwrap().push(req);
                        let _ = write_response(stream, status, &body);
                    }
                }
            });
        }
        StubServer {
            base_url: format!("http://{addr}/v1"),
            requests,
            hits,
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn read_request(stream: &TcpStream) -> Option<SeenRequest> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut headers = Vec::new();
    let mut content_length = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
            if k == "content-length" {
                content_length = v.parse().ok()?;
            }
            headers.push((k, v));
        }
    }
    let mut raw_body = vec![0; content_length];
    reader.read_exact(&mut raw_body).ok()?;
    let body = serde_json::from_slice(&raw_body).unwrap_or(Value::Null);
    Some(SeenRequest {
        path,
        headers,
        raw_body,
        body,
    })
}

fn write_response(mut stream: TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// An OpenAI-style response body.
pub fn completion(content: &str, completion_tokens: u64, prompt_tokens: u64) -> String {
    json!({
        "id": "stub",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        "usage": {"completion_tokens": completion_tokens, "prompt_tokens": prompt_tokens,
                  "total_tokens": completion_tokens + prompt_tokens}
    })
    .to_string()
}

/// Text of the last user message in a request.
pub fn user_text(req: &SeenRequest) -> String {
    req.body["messages"]
        .as_array()
        .and_then(|m| m.iter().rev().find(|m| m["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string()
}

/// A stub that answers off-format first and complies only when reminded.
pub fn reluctant_schema_stub() -> StubServer {
    StubServer::spawn(|_, req| {
        if user_text(req).contains("Reminder:") {
            (200, completion("@say {name: C3}", 6, 80))
        } else {
            (200, completion("Hmm, I would rather not say.", 7, 70))
        }
    })
}

/// An address nothing listens on.
pub fn dead_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/v1")
}
