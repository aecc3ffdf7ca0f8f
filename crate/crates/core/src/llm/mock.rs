//! Local chat-completions server with scripted behaviors, used by tests and
//! examples in place of a real endpoint.

use crate::scale::{Item, ItemFormat, ScaleDefinition};
use serde_json::{json, Value};
use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use tiny_http::{Header, Response, Server};

#[derive(Debug, Clone, PartialEq)]
pub enum MockBehavior {
    /// Keyed option for multiple-choice items, maximum for Likert items.
    EchoKey,
    /// Same completion text for every request.
    FixedAnswer(String),
    /// The first `failures` requests across the session get 429.
    RateLimitThenSucceed {
        failures: usize,
        then: Box<MockBehavior>,
    },
    /// Free text that contains no option letter or integer.
    GarbageText,
    Unauthorized,
    /// Every request gets a 503.
    ServerError,
}

pub const GARBAGE_TEXT: &str = "Hmm, hard to say. It depends on context.";

pub struct MockServer {
    server: Arc<Server>,
    addr: std::net::SocketAddr,
    requests: Arc<Mutex<Vec<Value>>>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral localhost port and serves until dropped.
    pub fn start(scale: &ScaleDefinition, behavior: MockBehavior) -> io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::other("mock server bound to a non-IP address"))?;
        let server = Arc::new(server);
        let requests = Arc::new(Mutex::new(Vec::new()));
        let items = scale.items.clone();
        let handle = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || serve(&server, &items, &behavior, &requests))
        };
        Ok(Self {
            server,
            addr,
            requests,
            handle: Some(handle),
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Request bodies received so far, in arrival order.
    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().map(|r| r.clone()).unwrap_or_default()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(server: &Server, items: &[Item], behavior: &MockBehavior, log: &Mutex<Vec<Value>>) {
    let served = AtomicUsize::new(0);
    for mut request in server.incoming_requests() {
        let mut body = String::new();
        let _ = request.as_reader().read_to_string(&mut body);
        let parsed: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
        if let Ok(mut l) = log.lock() {
            l.push(parsed.clone());
        }
        let n = served.fetch_add(1, Ordering::SeqCst);
        let (status, payload) = respond(items, behavior, &parsed, n);
        let header = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header");
        let response = Response::from_string(payload.to_string())
            .with_status_code(status)
            .with_header(header);
        let _ = request.respond(response);
    }
}

fn respond(items: &[Item], behavior: &MockBehavior, req: &Value, n: usize) -> (u16, Value) {
    match behavior {
        MockBehavior::Unauthorized => (401, json!({"error": {"message": "invalid api key"}})),
        MockBehavior::ServerError => (503, json!({"error": {"message": "overloaded"}})),
        MockBehavior::RateLimitThenSucceed { failures, then } => {
            if n < *failures {
                (429, json!({"error": {"message": "rate limit exceeded"}}))
            } else {
                respond(items, then, req, n)
            }
        }
        MockBehavior::GarbageText => (200, completion(GARBAGE_TEXT)),
        MockBehavior::FixedAnswer(text) => (200, completion(text)),
        MockBehavior::EchoKey => {
            let user = req["messages"]
                .as_array()
                .and_then(|m| m.iter().rev().find(|msg| msg["role"] == "user"))
                .and_then(|msg| msg["content"].as_str())
                .unwrap_or("");
            match match_item(items, user) {
                Some(item) => (200, completion(&echo_answer(item))),
                None => (400, json!({"error": {"message": "unknown item"}})),
            }
        }
    }
}

fn match_item<'a>(items: &'a [Item], user_text: &str) -> Option<&'a Item> {
    items
        .iter()
        .filter(|it| user_text.starts_with(it.text.as_str()))
        .max_by_key(|it| it.text.len())
}

fn echo_answer(item: &Item) -> String {
    match &item.format {
        ItemFormat::MultipleChoice { rational_key, .. } => rational_key.clone(),
        ItemFormat::Likert { max, .. } => max.to_string(),
    }
}

fn completion(text: &str) -> Value {
    json!({
        "id": "mock-completion",
        "object": "chat.completion",
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop"
        }]
    })
}
