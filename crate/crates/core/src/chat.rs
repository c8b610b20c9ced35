//! Minimal blocking chat-completion client shared by the HTTP generator and
//! prover backends.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "CONJ_API_KEY";

/// Failure of a remote or scripted backend.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum BackendError {
    /// Network, auth, or exhausted-retry failure.
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    /// The backend answered but produced no usable text.
    #[error("backend refused: {0}")]
    Refusal(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    /// Omitted from the request when unset, leaving the server default.
    pub temperature: Option<f64>,
    pub request_timeout_secs: u64,
    pub retries: u32,
    pub backoff_ms: u64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_owned(),
            model: "o3".to_owned(),
            temperature: None,
            request_timeout_secs: 600,
            retries: 3,
            backoff_ms: 1000,
        }
    }
}

/// Token counts reported by the server, when present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

pub struct ChatClient {
    config: ChatConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl ChatClient {
    pub fn new(config: ChatConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        ChatClient { config, api_key, agent }
    }

    /// Client with the key taken from [`API_KEY_ENV`].
    pub fn from_env(config: ChatConfig) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(config, key)
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    pub fn request_body(&self, system: &str, user: &str) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        body
    }

    /// Sends one system+user exchange and returns the first choice's text.
    /// 5xx responses, 429 and transport failures are retried with
    /// exponential backoff.
    pub fn complete(&self, system: &str, user: &str) -> Result<Completion, BackendError> {
        let body = self.request_body(system, user);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    tracing::warn!(attempt, "chat request failed: {msg}");
                    last = msg;
                }
            }
        }
        Err(BackendError::Unavailable(format!("gave up after {} attempts: {last}", self.config.retries + 1)))
    }

    fn attempt(&self, body: &Value) -> Result<Completion, Attempt> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        if status >= 500 || status == 429 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if status >= 400 {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Attempt::Fatal(BackendError::Unavailable(format!("HTTP {status}: {}", detail.trim()))));
        }
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(BackendError::Refusal(format!("non-JSON response: {e}"))))?;
        match value.pointer("/choices/0/message/content").and_then(Value::as_str) {
            Some(text) if !text.trim().is_empty() => Ok(Completion {
                text: text.to_owned(),
                usage: value.get("usage").and_then(|u| serde_json::from_value(u.clone()).ok()),
            }),
            _ => Err(Attempt::Fatal(BackendError::Refusal("response has no text in the first choice".to_owned()))),
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// One-shot HTTP server answering each connection with the next canned
    /// `(status, body)` pair. Returns the URL and the captured request bodies.
    pub fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let seen2 = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((mut stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).ok();
                seen2.lock().unwrap().push(String::from_utf8_lossy(&buf).into_owned());
                let resp = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(resp.as_bytes()).ok();
            }
        });
        (url, seen)
    }

    pub fn completion(text: &str) -> String {
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
    }
}
