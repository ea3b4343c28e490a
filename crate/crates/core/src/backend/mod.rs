//! Logits providers.
//!
//! The decoder only ever asks a backend for the next-token logits of a full
//! context. Caching, devices and quantization are the backend's business.

mod http;
mod toy;

pub use http::HttpBackend;
pub use toy::{ShiftAnchor, ShiftRule, TableEntry, ToyModel, ToyModelSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Logits, TokenId};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("token {token} at position {position} is outside the vocabulary (size {vocab_size})")]
    TokenOutOfRange {
        position: usize,
        token: TokenId,
        vocab_size: usize,
    },

    #[error("backend returned {actual} logits, vocabulary size is {expected}")]
    VocabMismatch { expected: usize, actual: usize },

    #[error("batch row {row}: {source}")]
    BatchRow {
        row: usize,
        #[source]
        source: Box<BackendError>,
    },

    #[error("backend has no tokenizer")]
    NoTokenizer,

    #[error("tokenizer: {0}")]
    Tokenize(String),

    #[error("transport: {0}")]
    Transport(String),

    #[error("server returned status {status}: {message}")]
    Server { status: u16, message: String },

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("invalid toy model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendMeta {
    pub vocab_size: usize,
    pub has_tokenizer: bool,
    pub stop_token_ids: Vec<TokenId>,
    pub model_id: String,
}

impl BackendMeta {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.vocab_size < 2 {
            return Err(BackendError::Protocol(format!(
                "vocab_size must be at least 2, got {}",
                self.vocab_size
            )));
        }
        if let Some(&t) = self.stop_token_ids.iter().find(|&&t| t as usize >= self.vocab_size) {
            return Err(BackendError::Protocol(format!(
                "stop token {t} outside vocabulary of size {}",
                self.vocab_size
            )));
        }
        Ok(())
    }
}

/// Source of next-token logits.
///
/// `logits` must be a deterministic function of the full context, and
/// `batched_logits(cs)[i]` must equal `logits(cs[i])` exactly.
pub trait LogitsBackend: Send + Sync {
    fn meta(&self) -> &BackendMeta;

    fn logits(&self, context: &[TokenId]) -> Result<Logits, BackendError>;

    fn batched_logits(&self, contexts: &[&[TokenId]]) -> Result<Vec<Logits>, BackendError> {
        contexts
            .iter()
            .enumerate()
            .map(|(row, c)| {
                self.logits(c).map_err(|e| BackendError::BatchRow {
                    row,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Whether `batched_logits` runs as one fused call.
    fn supports_batching(&self) -> bool {
        false
    }

    fn tokenize(&self, _text: &str) -> Result<Vec<TokenId>, BackendError> {
        Err(BackendError::NoTokenizer)
    }

    fn detokenize(&self, _tokens: &[TokenId]) -> Result<String, BackendError> {
        Err(BackendError::NoTokenizer)
    }
}

/// Check that every id in `context` lies inside a vocabulary of `vocab_size`.
pub fn check_context(context: &[TokenId], vocab_size: usize) -> Result<(), BackendError> {
    match context.iter().position(|&t| t as usize >= vocab_size) {
        Some(position) => Err(BackendError::TokenOutOfRange {
            position,
            token: context[position],
            vocab_size,
        }),
        None => Ok(()),
    }
}
