//! Client for the HTTP logits protocol.
//!
//! | method | path               | request                      | response                       |
//! |--------|--------------------|------------------------------|--------------------------------|
//! | GET    | `/v1/meta`         |                              | [`BackendMeta`]                |
//! | POST   | `/v1/logits`       | `{"tokens": [int]}`          | `{"logits": [float]}`          |
//! | POST   | `/v1/logits_batch` | `{"batch": [[int]]}`         | `{"logits": [[float]]}`        |
//! | POST   | `/v1/tokenize`     | `{"text": str}`              | `{"tokens": [int]}`            |
//! | POST   | `/v1/detokenize`   | `{"tokens": [int]}`          | `{"text": str}`                |
//!
//! Errors come back as `{"error": str}` with status 400 (malformed request)
//! or 422 (token id out of range).

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{check_context, BackendError, BackendMeta, LogitsBackend};
use crate::{Logits, TokenId};

const MAX_BODY_BYTES: u64 = 256 * 1024 * 1024;

#[derive(Serialize)]
struct TokensBody<'a> {
    tokens: &'a [TokenId],
}

#[derive(Serialize)]
struct BatchBody<'a> {
    batch: &'a [&'a [TokenId]],
}

#[derive(Serialize)]
struct TextBody<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct LogitsReply {
    logits: Vec<f64>,
}

#[derive(Deserialize)]
struct BatchReply {
    logits: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct TokensReply {
    tokens: Vec<TokenId>,
}

#[derive(Deserialize)]
struct TextReply {
    text: String,
}

#[derive(Deserialize)]
struct ErrorReply {
    error: String,
}

pub struct HttpBackend {
    base: String,
    agent: Agent,
    meta: BackendMeta,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("base", &self.base)
            .field("meta", &self.meta)
            .finish()
    }
}

impl HttpBackend {
    /// Connect to a server and fetch its metadata.
    pub fn connect(base_url: &str) -> Result<Self, BackendError> {
        Self::connect_with_timeout(base_url, Duration::from_secs(300))
    }

    pub fn connect_with_timeout(base_url: &str, timeout: Duration) -> Result<Self, BackendError> {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        let base = base_url.trim_end_matches('/').to_string();
        let mut backend = Self {
            base,
            agent,
            meta: BackendMeta {
                vocab_size: 0,
                has_tokenizer: false,
                stop_token_ids: Vec::new(),
                model_id: String::new(),
            },
        };
        let meta: BackendMeta = backend.get("/v1/meta")?;
        meta.validate()?;
        backend.meta = meta;
        Ok(backend)
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R, BackendError> {
        let resp = self
            .agent
            .get(&format!("{}{path}", self.base))
            .call()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        decode_reply(resp)
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, BackendError> {
        let payload = serde_json::to_string(body).map_err(|e| BackendError::Protocol(e.to_string()))?;
        let resp = self
            .agent
            .post(&format!("{}{path}", self.base))
            .header("content-type", "application/json; charset=utf-8")
            .send(payload)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        decode_reply(resp)
    }

    fn checked_row(&self, values: Vec<f64>) -> Result<Logits, BackendError> {
        if values.len() != self.meta.vocab_size {
            return Err(BackendError::VocabMismatch {
                expected: self.meta.vocab_size,
                actual: values.len(),
            });
        }
        Logits::new(values).map_err(|e| BackendError::Protocol(e.to_string()))
    }
}

fn decode_reply<R: DeserializeOwned>(mut resp: ureq::http::Response<ureq::Body>) -> Result<R, BackendError> {
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .with_config()
        .limit(MAX_BODY_BYTES)
        .read_to_string()
        .map_err(|e| BackendError::Transport(e.to_string()))?;
    if !(200..300).contains(&status) {
        let message = serde_json::from_str::<ErrorReply>(&text)
            .map(|r| r.error)
            .unwrap_or(text);
        return Err(BackendError::Server { status, message });
    }
    serde_json::from_str(&text).map_err(|e| BackendError::Protocol(format!("bad response body: {e}")))
}

impl LogitsBackend for HttpBackend {
    fn meta(&self) -> &BackendMeta {
        &self.meta
    }

    fn logits(&self, context: &[TokenId]) -> Result<Logits, BackendError> {
        check_context(context, self.meta.vocab_size)?;
        let reply: LogitsReply = self.post("/v1/logits", &TokensBody { tokens: context })?;
        self.checked_row(reply.logits)
    }

    fn batched_logits(&self, contexts: &[&[TokenId]]) -> Result<Vec<Logits>, BackendError> {
        if contexts.is_empty() {
            return Ok(Vec::new());
        }
        for (row, c) in contexts.iter().enumerate() {
            check_context(c, self.meta.vocab_size).map_err(|e| BackendError::BatchRow {
                row,
                source: Box::new(e),
            })?;
        }
        let reply: BatchReply = self.post("/v1/logits_batch", &BatchBody { batch: contexts })?;
        if reply.logits.len() != contexts.len() {
            return Err(BackendError::Protocol(format!(
                "batch of {} contexts answered with {} rows",
                contexts.len(),
                reply.logits.len()
            )));
        }
        reply
            .logits
            .into_iter()
            .enumerate()
            .map(|(row, values)| {
                self.checked_row(values).map_err(|e| BackendError::BatchRow {
                    row,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    fn supports_batching(&self) -> bool {
        true
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, BackendError> {
        if !self.meta.has_tokenizer {
            return Err(BackendError::NoTokenizer);
        }
        let reply: TokensReply = self.post("/v1/tokenize", &TextBody { text })?;
        check_context(&reply.tokens, self.meta.vocab_size)?;
        Ok(reply.tokens)
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String, BackendError> {
        if !self.meta.has_tokenizer {
            return Err(BackendError::NoTokenizer);
        }
        let reply: TextReply = self.post("/v1/detokenize", &TokensBody { tokens })?;
        Ok(reply.text)
    }
}
