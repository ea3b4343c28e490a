//! Deterministic n-gram test double.
//!
//! Logits come from a table keyed by the trailing context window, backing off
//! to shorter windows and finally to `default_logits`. Shift rules add a fixed
//! vector whenever their trigger sequence appears in the context, which makes
//! the principled-minus-plain difference known exactly. The table never sees
//! a matched prefix trigger: it looks up the context that follows it.
//!
//! Files are JSON documents:
//!
//! ```json
//! {
//!   "model_id": "toy",
//!   "vocab_size": 4,
//!   "order": 2,
//!   "stop_token_ids": [0],
//!   "vocab": ["<eos>", "a", "b", "principle"],
//!   "unk_token": null,
//!   "default_logits": [0.0, 1.0, 0.5, -1.0],
//!   "table": [{ "context": [1], "logits": [2.0, 0.0, 1.0, -1.0] }],
//!   "principle_shifts": [{ "trigger": [3], "shift": [0.0, 0.0, 1.0, 0.0], "anchor": "prefix" }]
//! }
//! ```

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_context, BackendError, BackendMeta, LogitsBackend};
use crate::{Logits, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftAnchor {
    /// Trigger must be the first tokens of the context.
    #[default]
    Prefix,
    /// Trigger may occur anywhere as a contiguous run.
    Anywhere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftRule {
    pub trigger: Vec<TokenId>,
    pub shift: Vec<f64>,
    #[serde(default)]
    pub anchor: ShiftAnchor,
}

impl ShiftRule {
    fn matches(&self, context: &[TokenId]) -> bool {
        match self.anchor {
            ShiftAnchor::Prefix => context.starts_with(&self.trigger),
            ShiftAnchor::Anywhere => context
                .windows(self.trigger.len())
                .any(|w| w == self.trigger.as_slice()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub context: Vec<TokenId>,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyModelSpec {
    #[serde(default = "default_model_id")]
    pub model_id: String,
    pub vocab_size: usize,
    /// n-gram order; table keys are shorter than this.
    pub order: usize,
    #[serde(default)]
    pub stop_token_ids: Vec<TokenId>,
    /// One word per token id. Enables whitespace tokenization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<Vec<String>>,
    /// Id for words missing from `vocab`; without it they are an error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unk_token: Option<TokenId>,
    pub default_logits: Vec<f64>,
    #[serde(default)]
    pub table: Vec<TableEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub principle_shifts: Vec<ShiftRule>,
}

fn default_model_id() -> String {
    "toy".to_string()
}

fn invalid(msg: impl Into<String>) -> BackendError {
    BackendError::InvalidModel(msg.into())
}

impl ToyModelSpec {
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("toy model spec serializes")
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let n = self.vocab_size;
        if n < 2 {
            return Err(invalid(format!("vocab_size must be at least 2, got {n}")));
        }
        if self.order < 1 {
            return Err(invalid("order must be at least 1"));
        }
        let check_vec = |what: &str, v: &[f64]| {
            if v.len() != n {
                return Err(invalid(format!("{what}: length {} != vocab_size {n}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{what}: non-finite value")));
            }
            Ok(())
        };
        let check_ids =
            |what: &str, ids: &[TokenId]| check_context(ids, n).map_err(|e| invalid(format!("{what}: {e}")));

        check_vec("default_logits", &self.default_logits)?;
        check_ids("stop_token_ids", &self.stop_token_ids)?;
        let mut seen = std::collections::HashSet::new();
        for (i, entry) in self.table.iter().enumerate() {
            let what = format!("table[{i}]");
            if entry.context.len() >= self.order {
                return Err(invalid(format!(
                    "{what}: context length {} must be below order {}",
                    entry.context.len(),
                    self.order
                )));
            }
            check_ids(&what, &entry.context)?;
            check_vec(&what, &entry.logits)?;
            if !seen.insert(entry.context.as_slice()) {
                return Err(invalid(format!("{what}: duplicate context {:?}", entry.context)));
            }
        }
        for (i, rule) in self.principle_shifts.iter().enumerate() {
            let what = format!("principle_shifts[{i}]");
            if rule.trigger.is_empty() {
                return Err(invalid(format!("{what}: empty trigger")));
            }
            check_ids(&what, &rule.trigger)?;
            check_vec(&what, &rule.shift)?;
        }
        if let Some(vocab) = &self.vocab {
            if vocab.len() != n {
                return Err(invalid(format!("vocab: {} words for vocab_size {n}", vocab.len())));
            }
            let mut words = std::collections::HashSet::new();
            for w in vocab {
                if w.is_empty() || w.chars().any(char::is_whitespace) {
                    return Err(invalid(format!("vocab: word {w:?} is empty or contains whitespace")));
                }
                if !words.insert(w.as_str()) {
                    return Err(invalid(format!("vocab: duplicate word {w:?}")));
                }
            }
        }
        if let Some(unk) = self.unk_token {
            if self.vocab.is_none() {
                return Err(invalid("unk_token requires vocab"));
            }
            check_ids("unk_token", &[unk])?;
        }
        Ok(())
    }
}

/// Backend over a validated [`ToyModelSpec`].
#[derive(Debug, Clone)]
pub struct ToyModel {
    spec: ToyModelSpec,
    meta: BackendMeta,
    table: HashMap<Vec<TokenId>, Vec<f64>>,
    words: HashMap<String, TokenId>,
}

impl ToyModel {
    pub fn from_spec(spec: ToyModelSpec) -> Result<Self, BackendError> {
        spec.validate()?;
        let table = spec
            .table
            .iter()
            .map(|e| (e.context.clone(), e.logits.clone()))
            .collect();
        let words = spec
            .vocab
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as TokenId))
            .collect();
        let meta = BackendMeta {
            vocab_size: spec.vocab_size,
            has_tokenizer: spec.vocab.is_some(),
            stop_token_ids: spec.stop_token_ids.clone(),
            model_id: spec.model_id.clone(),
        };
        Ok(Self {
            spec,
            meta,
            table,
            words,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        Self::from_spec(ToyModelSpec::from_json(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            BackendError::InvalidModel(msg) => invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn spec(&self) -> &ToyModelSpec {
        &self.spec
    }

    /// Table entry for the longest matching trailing window, if any.
    fn lookup(&self, context: &[TokenId]) -> &[f64] {
        let window = context.len().min(self.spec.order - 1);
        (0..=window)
            .rev()
            .find_map(|k| self.table.get(&context[context.len() - k..]))
            .map_or(self.spec.default_logits.as_slice(), Vec::as_slice)
    }
}

impl LogitsBackend for ToyModel {
    fn meta(&self) -> &BackendMeta {
        &self.meta
    }

    /// Empty contexts are accepted and fall through to the shortest table
    /// key or `default_logits`.
    fn logits(&self, context: &[TokenId]) -> Result<Logits, BackendError> {
        check_context(context, self.spec.vocab_size)?;
        // A matched prefix trigger is invisible to the table, so the rule's
        // shift is the whole difference from the trigger-free context.
        let consumed = self
            .spec
            .principle_shifts
            .iter()
            .filter(|r| r.anchor == ShiftAnchor::Prefix && r.matches(context))
            .map(|r| r.trigger.len())
            .max()
            .unwrap_or(0);
        let mut out = self.lookup(&context[consumed..]).to_vec();
        for rule in self.spec.principle_shifts.iter().filter(|r| r.matches(context)) {
            for (o, s) in out.iter_mut().zip(&rule.shift) {
                *o += s;
            }
        }
        Logits::new(out).map_err(|e| BackendError::Protocol(e.to_string()))
    }

    fn supports_batching(&self) -> bool {
        true
    }

    /// Whitespace-separated words looked up in `vocab`.
    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, BackendError> {
        if self.spec.vocab.is_none() {
            return Err(BackendError::NoTokenizer);
        }
        text.split_whitespace()
            .map(|w| {
                self.words
                    .get(w)
                    .copied()
                    .or(self.spec.unk_token)
                    .ok_or_else(|| BackendError::Tokenize(format!("unknown word {w:?}")))
            })
            .collect()
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String, BackendError> {
        let vocab = self.spec.vocab.as_ref().ok_or(BackendError::NoTokenizer)?;
        check_context(tokens, self.spec.vocab_size)?;
        Ok(tokens
            .iter()
            .map(|&t| vocab[t as usize].as_str())
            .collect::<Vec<_>>()
            .join(" "))
    }
}
